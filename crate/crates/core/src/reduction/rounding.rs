use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{IntegerWeightedInstance, WeightedInstance};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, Serialize)]
pub struct RoundingParams {
    #[serde(with = "rational::serde_rational")]
    pub epsilon: Rational,
    #[serde(with = "rational::serde_rational")]
    pub w_min: Rational,
    /// `2 / (epsilon * w_min)`.
    #[serde(with = "rational::serde_rational")]
    pub scale: Rational,
    /// `1 + epsilon`.
    #[serde(with = "rational::serde_rational")]
    pub base: Rational,
}

pub struct Rounded {
    pub instance: IntegerWeightedInstance,
    pub params: RoundingParams,
    /// Scaled weights `w_s`, indexed by id; zero outside the support.
    pub scaled: Vec<Rational>,
}

/// Scales by `2/(eps * w_min)` and rounds down to the integer part of the geometric
/// bucket `(1+eps)^i <= w_s < (1+eps)^(i+1)`. Per element `w_s/(1+eps)^2 <= w_r <= w_s`.
pub fn rescale_round(inst: &WeightedInstance, eps: &Rational) -> Result<Rounded> {
    rational::check_epsilon(eps)?;
    let w_min = inst.min_weight().unwrap_or_else(Rational::one);
    let scale = Rational::from_integer(2.into()) / (eps * &w_min);
    let base = Rational::one() + eps;
    let params = RoundingParams {
        epsilon: eps.clone(),
        w_min,
        scale,
        base,
    };

    // powers[i] = (1+eps)^i, grown on demand.
    let mut powers = vec![Rational::one()];
    let mut scaled = vec![Rational::from_integer(0.into()); inst.ground_size()];
    let mut weights = vec![0u64; inst.ground_size()];
    for e in &inst.support {
        let ws = inst.weight(e) * &params.scale;
        while *powers.last().expect("non-empty") <= ws {
            let next = powers.last().expect("non-empty") * &params.base;
            powers.push(next);
        }
        let i = powers.partition_point(|p| *p <= ws) - 1;
        let wr = rational::floor_u64(&powers[i])?;
        if wr == 0 {
            return Err(Error::ContractViolation("rounded weight is zero".into()));
        }
        weights[e.index()] = wr;
        scaled[e.index()] = ws;
    }
    let instance = IntegerWeightedInstance::new(
        inst.m1.clone(),
        inst.m2.clone(),
        weights,
        inst.support.clone(),
    )?;
    Ok(Rounded {
        instance,
        params,
        scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{FamilySpec, InstanceSpec};
    use crate::rational::{int, ratio};

    fn free(weights: Vec<Rational>) -> WeightedInstance {
        InstanceSpec {
            n: weights.len(),
            matroid1: FamilySpec::Uniform { k: weights.len() },
            matroid2: FamilySpec::Uniform { k: weights.len() },
            weights,
            weight_range: None,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn half_epsilon_example() {
        let r = rescale_round(&free(vec![int(1), int(10)]), &ratio(1, 2)).unwrap();
        assert_eq!(r.scaled, vec![int(4), int(40)]);
        assert_eq!(r.instance.weights, vec![3, 38]);
        // 3 >= 4 / 2.25
        assert!(int(3) >= int(4) / (ratio(3, 2) * ratio(3, 2)));
    }

    #[test]
    fn equal_weights_share_a_bucket() {
        let r = rescale_round(&free(vec![ratio(7, 3); 4]), &ratio(1, 10)).unwrap();
        assert!(r.instance.weights.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(matches!(
            rescale_round(&free(vec![int(1)]), &ratio(3, 4)),
            Err(Error::Input(_))
        ));
    }
}
