use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::Result;
use crate::instance::WeightedInstance;
use crate::rational::{self, Rational};
use crate::set::{ElementId, ElementSet};

/// One weight class `N'_{i,l}`: weights (original scale) in `[lower, upper)`.
#[derive(Clone, Debug, Serialize)]
pub struct WeightClass {
    pub l: i64,
    #[serde(with = "rational::serde_rational")]
    pub lower: Rational,
    #[serde(with = "rational::serde_rational")]
    pub upper: Rational,
    pub members: ElementSet,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpreadIndex {
    pub i: u64,
    /// Non-empty classes, ascending in `l`.
    pub classes: Vec<WeightClass>,
}

impl SpreadIndex {
    pub fn members(&self) -> ElementSet {
        self.classes
            .iter()
            .fold(ElementSet::new(), |acc, c| acc.union(&c.members))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpreadDecomposition {
    #[serde(with = "rational::serde_rational")]
    pub epsilon: Rational,
    pub beta: u64,
    /// Weights are divided by this before class indexing.
    #[serde(with = "rational::serde_rational")]
    pub normalizer: Rational,
    pub indices: Vec<SpreadIndex>,
}

/// Class geometry for a fixed `eps`: base `b = 1/eps`, period `beta = ceil(1/eps)`.
///
/// A normalized weight `t >= 1` has exponent `k = floor(log_b t)`. For index `i` it is
/// dropped when `beta | (k - i)`, otherwise it falls in class `l = floor((k - i)/beta) + 1`
/// with interval `[b^(i+(l-1)beta+1), b^(i+l*beta))`.
#[derive(Clone, Debug)]
pub struct SpreadGeometry {
    pub epsilon: Rational,
    pub base: Rational,
    pub beta: u64,
}

impl SpreadGeometry {
    pub fn new(eps: &Rational) -> Result<Self> {
        rational::check_epsilon(eps)?;
        Ok(SpreadGeometry {
            epsilon: eps.clone(),
            base: eps.recip(),
            beta: rational::ceil_inverse(eps),
        })
    }

    /// `floor(log_b t)` for `t >= 1`.
    pub fn exponent(&self, t: &Rational) -> i64 {
        debug_assert!(*t >= Rational::one());
        let mut k = 0;
        let mut p = self.base.clone();
        while p <= *t {
            p *= &self.base;
            k += 1;
        }
        k
    }

    /// Class `l` of exponent `k` at index `i`, or `None` when the element is dropped there.
    pub fn class_of(&self, k: i64, i: u64) -> Option<i64> {
        let beta = self.beta as i64;
        let d = k - i as i64;
        (d.rem_euclid(beta) != 0).then(|| d.div_euclid(beta) + 1)
    }

    pub fn pow(&self, x: i64) -> Rational {
        if x >= 0 {
            num_traits::pow(self.base.clone(), x as usize)
        } else {
            num_traits::pow(self.base.recip(), (-x) as usize)
        }
    }

    /// Normalized interval `[b^(i+(l-1)beta+1), b^(i+l*beta))`.
    pub fn interval(&self, i: u64, l: i64) -> (Rational, Rational) {
        let beta = self.beta as i64;
        let i = i as i64;
        (self.pow(i + (l - 1) * beta + 1), self.pow(i + l * beta))
    }
}

/// Splits the support into `beta` groups of `1/eps`-spread classes after dividing all
/// weights by the minimum weight. Empty classes are omitted.
pub fn spread_decompose(inst: &WeightedInstance, eps: &Rational) -> Result<SpreadDecomposition> {
    let geo = SpreadGeometry::new(eps)?;
    let normalizer = inst.min_weight().unwrap_or_else(Rational::one);
    spread_with_normalizer(inst, &geo, &normalizer)
}

pub(crate) fn spread_with_normalizer(
    inst: &WeightedInstance,
    geo: &SpreadGeometry,
    normalizer: &Rational,
) -> Result<SpreadDecomposition> {
    let exponents: Vec<(ElementId, i64)> = inst
        .support
        .iter()
        .map(|e| (e, geo.exponent(&(inst.weight(e) / normalizer))))
        .collect();
    let mut indices = Vec::with_capacity(geo.beta as usize);
    for i in 1..=geo.beta {
        let mut by_l: std::collections::BTreeMap<i64, ElementSet> = Default::default();
        for &(e, k) in &exponents {
            if let Some(l) = geo.class_of(k, i) {
                by_l.entry(l).or_default().insert(e);
            }
        }
        let classes = by_l
            .into_iter()
            .map(|(l, members)| {
                let (lo, hi) = geo.interval(i, l);
                WeightClass {
                    l,
                    lower: lo * normalizer,
                    upper: hi * normalizer,
                    members,
                }
            })
            .collect();
        indices.push(SpreadIndex { i, classes });
    }
    Ok(SpreadDecomposition {
        epsilon: geo.epsilon.clone(),
        beta: geo.beta,
        normalizer: normalizer.clone(),
        indices,
    })
}

impl SpreadDecomposition {
    /// Largest `max/min` weight ratio observed inside any class.
    pub fn max_class_ratio(&self, inst: &WeightedInstance) -> Rational {
        let mut best = Rational::one();
        for c in self.indices.iter().flat_map(|s| &s.classes) {
            let ws = c.members.iter().map(|e| inst.weight(e));
            if let (Some(hi), Some(lo)) = (ws.clone().max(), ws.min()) {
                if !lo.is_zero() && hi / lo > best {
                    best = hi / lo;
                }
            }
        }
        best
    }

    pub fn class_count(&self) -> usize {
        self.indices.iter().map(|s| s.classes.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{FamilySpec, InstanceSpec};
    use crate::rational::{int, ratio};

    fn free(weights: Vec<Rational>) -> WeightedInstance {
        InstanceSpec {
            n: weights.len(),
            matroid1: FamilySpec::Uniform { k: 1 },
            matroid2: FamilySpec::Uniform { k: 1 },
            weights,
            weight_range: None,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn half_epsilon_example() {
        let d = spread_decompose(&free(vec![int(1), int(8), int(64)]), &ratio(1, 2)).unwrap();
        assert_eq!(d.beta, 2);
        let i1 = &d.indices[0];
        assert_eq!(i1.classes.len(), 2);
        assert_eq!(
            (i1.classes[0].lower.clone(), i1.classes[0].upper.clone()),
            (int(1), int(2))
        );
        assert_eq!(i1.classes[0].members, ElementSet::from_ids([0]));
        assert_eq!(
            (i1.classes[1].lower.clone(), i1.classes[1].upper.clone()),
            (int(64), int(128))
        );
        assert_eq!(i1.classes[1].members, ElementSet::from_ids([2]));
        let i2 = &d.indices[1];
        assert_eq!(i2.classes.len(), 1);
        assert_eq!(
            (i2.classes[0].lower.clone(), i2.classes[0].upper.clone()),
            (int(8), int(16))
        );
        assert_eq!(i2.classes[0].members, ElementSet::from_ids([1]));
    }

    #[test]
    fn single_element_missing_from_exactly_one_index() {
        let d = spread_decompose(&free(vec![ratio(5, 3)]), &ratio(1, 4)).unwrap();
        let present = d.indices.iter().filter(|s| !s.classes.is_empty()).count();
        assert_eq!(present as u64, d.beta - 1);
        let d = spread_decompose(&free(vec![ratio(5, 3)]), &ratio(1, 2)).unwrap();
        assert_eq!(
            d.indices.iter().filter(|s| !s.classes.is_empty()).count(),
            1
        );
    }

    #[test]
    fn weights_inside_one_class() {
        // eps = 1/2: normalized weights in [1, 2) have exponent 0, dropped at i = 2.
        let d = spread_decompose(&free(vec![int(3), ratio(9, 2)]), &ratio(1, 2)).unwrap();
        assert_eq!(d.indices[0].classes.len(), 1);
        assert_eq!(d.indices[0].classes[0].members.len(), 2);
        assert!(d.indices[1].classes.is_empty());
    }
}
