//! Additive auction for weighted matroid intersection.
//!
//! Every element's weight is split as `w = w_a + w_b` up to one pending step of size
//! `d·w`, `d = eps(1-eps)`. `S_a` is a max-`w_a` base of `M1`, `S_b` a max-`w_b` base of
//! `M2`. Elements in `S_a \ S_b` below the price cap shift weight from the `a` side to the
//! `b` side until few remain, and `S_a ∩ S_b` is returned.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::WeightedInstance;
use crate::ledger::ResourceLedger;
use crate::rational::{self, Rational};
use crate::set::ElementSet;
use crate::solvers::max_weight_base;

/// Algorithm state. Split weights are kept as step counts: `w_a = w(1 - cuts·d)` and
/// `w_b = w·raises·d`.
#[derive(Clone, Debug, Serialize)]
pub struct AuctionState {
    pub prices: Vec<u32>,
    pub raises: Vec<u32>,
    pub cuts: Vec<u32>,
    pub s_a: ElementSet,
    pub s_b: ElementSet,
}

impl AuctionState {
    /// `w_a(e) + w_b(e) == w(e)`; otherwise the sum is `w(e)(1 + d)`.
    pub fn balanced(&self, e: usize) -> bool {
        self.raises[e] == self.cuts[e]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuctionOutcome {
    pub set: ElementSet,
    #[serde(with = "rational::serde_rational")]
    pub weight: Rational,
    pub iterations: u64,
    pub price_cap: u32,
    /// Independence calls made on the instance's oracles.
    pub independence_calls: u64,
    pub state: AuctionState,
    /// Invariant checks performed after each iteration (0 when checking is off).
    pub invariant_checks: u64,
}

#[derive(Clone, Debug)]
pub struct AuctionConfig {
    pub epsilon: Rational,
    /// Verify `AuctionState` invariants after every iteration.
    pub check_invariants: bool,
}

impl AuctionConfig {
    pub fn new(epsilon: Rational) -> Self {
        AuctionConfig {
            epsilon,
            check_invariants: cfg!(debug_assertions),
        }
    }

    pub fn checked(epsilon: Rational) -> Self {
        AuctionConfig {
            epsilon,
            check_invariants: true,
        }
    }
}

/// Runs the auction with invariant checks enabled in debug builds.
pub fn auction_additive(inst: &WeightedInstance, eps: &Rational) -> Result<AuctionOutcome> {
    run_auction(inst, &AuctionConfig::new(eps.clone()))
}

pub fn run_auction(inst: &WeightedInstance, cfg: &AuctionConfig) -> Result<AuctionOutcome> {
    let eps = &cfg.epsilon;
    if !(eps > &Rational::zero() && eps < &Rational::one()) {
        return Err(Error::Input(format!(
            "epsilon {} outside (0, 1)",
            rational::format(eps)
        )));
    }
    let calls_before = call_count(inst);
    let split = Split::new(inst, eps)?;
    let price_cap = 2 * u32::try_from(rational::ceil_inverse(eps))
        .map_err(|_| Error::Input("epsilon too small".into()))?;
    let n = inst.n();
    let size = inst.ground_size();
    let mut st = AuctionState {
        prices: vec![0; size],
        raises: vec![0; size],
        cuts: vec![0; size],
        s_a: ElementSet::new(),
        s_b: ElementSet::new(),
    };
    st.s_a = max_weight_base(&*inst.m1, &split.a_weights(&st), &inst.support, None)?;
    st.s_b = max_weight_base(&*inst.m2, &split.b_weights(&st), &inst.support, None)?;

    let mut iterations = 0;
    let mut checks = 0;
    loop {
        let x: Vec<usize> = st
            .s_a
            .difference(&st.s_b)
            .iter()
            .map(|e| e.index())
            .filter(|&e| st.prices[e] < price_cap)
            .collect();
        // |X| <= eps * n, compared exactly.
        if BigInt::from(x.len()) * eps.denom() <= eps.numer() * BigInt::from(n) {
            break;
        }
        for &e in &x {
            st.prices[e] += 1;
            if st.balanced(e) {
                st.raises[e] += 1;
            } else {
                st.cuts[e] += 1;
            }
        }
        st.s_a = max_weight_base(
            &*inst.m1,
            &split.a_weights(&st),
            &inst.support,
            Some(&st.s_a),
        )?;
        st.s_b = max_weight_base(
            &*inst.m2,
            &split.b_weights(&st),
            &inst.support,
            Some(&st.s_b),
        )?;
        iterations += 1;
        if cfg.check_invariants {
            check_invariants(&st, inst, price_cap)?;
            checks += 1;
        }
    }
    let set = st.s_a.intersection(&st.s_b);
    Ok(AuctionOutcome {
        weight: inst.weight_of(&set),
        set,
        iterations,
        price_cap,
        independence_calls: call_count(inst) - calls_before,
        state: st,
        invariant_checks: checks,
    })
}

/// Price cap, weight-sum dichotomy, and zero `b`-weight on `S_b \ S_a`.
pub fn check_invariants(st: &AuctionState, inst: &WeightedInstance, price_cap: u32) -> Result<()> {
    for e in &inst.support {
        let i = e.index();
        if st.prices[i] > price_cap {
            return Err(Error::ContractViolation(format!(
                "price of {e} exceeds the cap {price_cap}"
            )));
        }
        if st.raises[i] != st.cuts[i] && st.raises[i] != st.cuts[i] + 1 {
            return Err(Error::ContractViolation(format!(
                "split weights of {e} left the two allowed sums"
            )));
        }
    }
    if let Some(e) = st
        .s_b
        .difference(&st.s_a)
        .iter()
        .find(|e| st.raises[e.index()] != 0)
    {
        return Err(Error::ContractViolation(format!(
            "element {e} of S_b \\ S_a has positive b-weight"
        )));
    }
    Ok(())
}

impl AuctionOutcome {
    /// Upper bound `w_a(S_a) + max_B w'_b(B)` on the optimum, where `w'_b = w_b - d·w` on
    /// unbalanced elements so that `w_a + w'_b = w` everywhere.
    pub fn splitting_bound(&self, inst: &WeightedInstance, eps: &Rational) -> Result<Rational> {
        let split = Split::new(inst, eps)?;
        let wa = split.a_weights(&self.state);
        let wb: Vec<i128> = (0..inst.ground_size())
            .map(|e| {
                let k = self.state.raises[e] - u32::from(!self.state.balanced(e));
                split.scaled[e] * i128::from(k) * split.step
            })
            .collect();
        let b_base = max_weight_base(&*inst.m2, &wb, &inst.support, None)?;
        let total: i128 = self.state.s_a.iter().map(|e| wa[e.index()]).sum::<i128>()
            + b_base.iter().map(|e| wb[e.index()]).sum::<i128>();
        Ok(Rational::new(total.into(), split.unit.clone()))
    }
}

/// Exact integer representation: `w_a(e)` and `w_b(e)` times `unit` are integers.
struct Split {
    /// `w(e)` times the common weight denominator.
    scaled: Vec<i128>,
    /// `q^2` for `eps = p/q`.
    whole: i128,
    /// `p(q - p)`.
    step: i128,
    unit: BigInt,
}

impl Split {
    fn new(inst: &WeightedInstance, eps: &Rational) -> Result<Self> {
        let support_weights = inst.support.iter().map(|e| inst.weight(e));
        let denom = rational::common_denominator(support_weights);
        let scaled = (0..inst.ground_size())
            .map(|e| {
                if inst.support.contains(crate::set::ElementId(e as u32)) {
                    rational::scaled_i128(&inst.weights[e], &denom)
                } else {
                    Ok(0)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let overflow = || Error::Budget("auction arithmetic overflows i128".into());
        let p = eps.numer().to_i128().ok_or_else(overflow)?;
        let q = eps.denom().to_i128().ok_or_else(overflow)?;
        let whole = q.checked_mul(q).ok_or_else(overflow)?;
        let max = scaled.iter().copied().max().unwrap_or(0);
        max.checked_mul(whole).ok_or_else(overflow)?;
        Ok(Split {
            scaled,
            whole,
            step: p * (q - p),
            unit: denom * BigInt::from(whole),
        })
    }

    fn a_weights(&self, st: &AuctionState) -> Vec<i128> {
        self.scaled
            .iter()
            .zip(&st.cuts)
            .map(|(&w, &k)| w * (self.whole - i128::from(k) * self.step))
            .collect()
    }

    fn b_weights(&self, st: &AuctionState) -> Vec<i128> {
        self.scaled
            .iter()
            .zip(&st.raises)
            .map(|(&w, &k)| w * i128::from(k) * self.step)
            .collect()
    }
}

fn call_count(inst: &WeightedInstance) -> u64 {
    independence_calls(inst.m1.ledger(), inst.m2.ledger())
}

/// Independence calls over two ledgers, counting a shared ledger once.
pub(crate) fn independence_calls(l1: &Arc<ResourceLedger>, l2: &Arc<ResourceLedger>) -> u64 {
    if Arc::ptr_eq(l1, l2) {
        l1.independence_calls()
    } else {
        l1.independence_calls() + l2.independence_calls()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures;
    use crate::rational::{int, ratio};
    use crate::reduction::brute_force_opt;

    #[test]
    fn e1_additive_bound() {
        let inst = fixtures::e1().build().unwrap();
        let out = run_auction(&inst, &AuctionConfig::checked(ratio(1, 10))).unwrap();
        assert!(inst.is_common_independent(&out.set).unwrap());
        assert!(out.weight >= ratio(13, 10));
        let (opt, _) = brute_force_opt(&inst).unwrap();
        assert_eq!(opt, int(4));
        assert!(out.splitting_bound(&inst, &ratio(1, 10)).unwrap() >= opt);
    }

    #[test]
    fn single_free_element_is_returned() {
        let inst = fixtures::single(int(7)).build().unwrap();
        let out = run_auction(&inst, &AuctionConfig::checked(ratio(1, 4))).unwrap();
        assert_eq!(out.set, ElementSet::from_ids([0]));
    }

    #[test]
    fn large_epsilon_returns_initial_intersection() {
        let inst = fixtures::e1().build().unwrap();
        let out = run_auction(&inst, &AuctionConfig::checked(ratio(9, 10))).unwrap();
        // |S_a \ S_b| = 2 <= 0.9 * 3 at the start.
        assert_eq!(out.iterations, 0);
        assert_eq!(out.set, ElementSet::new());
        let (opt, _) = brute_force_opt(&inst).unwrap();
        assert!(out.weight >= opt - int(3) * ratio(9, 10) * int(3) * int(3));
    }

    #[test]
    fn epsilon_range_is_checked() {
        let inst = fixtures::e1().build().unwrap();
        assert!(matches!(
            auction_additive(&inst, &int(1)),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            auction_additive(&inst, &int(0)),
            Err(Error::Input(_))
        ));
    }
}
