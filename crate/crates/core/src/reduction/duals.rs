//! Integral chain duals and their lift to the unfolded instance.
//!
//! A dual pair `(y, z)` assigns non-negative values to subsets; its objective is
//! `sum y(S) rk1(S) + z(S) rk2(S)` and it covers `e` with `sum over S ∋ e of y(S) + z(S)`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::IntegerWeightedInstance;
use crate::matroid::MatroidOracle;
use crate::reduction::brute::brute_force_opt;
use crate::reduction::unfold::UnfoldedInstance;
use crate::set::{ElementId, ElementSet};

/// Strictly descending chain `S_1 ⊋ S_2 ⊋ ...` with positive integer values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChainDual {
    pub entries: Vec<(ElementSet, u64)>,
}

impl ChainDual {
    pub fn validate(&self) -> Result<()> {
        if let Some((_, v)) = self.entries.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Precondition(format!(
                "chain value {v} is not positive"
            )));
        }
        for pair in self.entries.windows(2) {
            let (outer, inner) = (&pair[0].0, &pair[1].0);
            if !(inner.is_subset(outer) && inner.len() < outer.len()) {
                return Err(Error::Precondition(
                    "dual support is not a strictly descending chain".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn coverage(&self, e: ElementId) -> u64 {
        self.entries
            .iter()
            .filter(|(s, _)| s.contains(e))
            .map(|(_, v)| v)
            .sum()
    }

    /// `sum value * rank(set)`.
    pub fn value(&self, m: &dyn MatroidOracle) -> Result<u64> {
        self.entries
            .iter()
            .try_fold(0u64, |acc, (s, v)| Ok(acc + v * m.rank(s)? as u64))
    }

    /// Chain whose level sets are `{e : c(e) >= t}` for `t = 1, 2, ...`; equal consecutive
    /// levels merge into one entry.
    pub fn from_coverage(elements: &[ElementId], c: &[u64]) -> ChainDual {
        let top = c.iter().copied().max().unwrap_or(0);
        let mut entries: Vec<(ElementSet, u64)> = Vec::new();
        for t in 1..=top {
            let level: ElementSet = elements
                .iter()
                .zip(c)
                .filter(|(_, &ce)| ce >= t)
                .map(|(e, _)| *e)
                .collect();
            match entries.last_mut() {
                Some((s, v)) if *s == level => *v += 1,
                _ => entries.push((level, 1)),
            }
        }
        ChainDual { entries }
    }
}

/// `g(y', z') = y'.value(m1) + z'.value(m2)`.
pub fn chain_objective(
    yp: &ChainDual,
    zp: &ChainDual,
    m1: &dyn MatroidOracle,
    m2: &dyn MatroidOracle,
) -> Result<u64> {
    Ok(yp.value(m1)? + zp.value(m2)?)
}

/// Dual assignment on the unfolded ground set. Entries need not form a chain.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DualPair {
    pub y: Vec<(ElementSet, u64)>,
    pub z: Vec<(ElementSet, u64)>,
}

impl DualPair {
    /// `f(y, z)`.
    pub fn objective(&self, m1: &dyn MatroidOracle, m2: &dyn MatroidOracle) -> Result<u64> {
        let side = |entries: &[(ElementSet, u64)], m: &dyn MatroidOracle| -> Result<u64> {
            entries
                .iter()
                .try_fold(0u64, |acc, (s, v)| Ok(acc + v * m.rank(s)? as u64))
        };
        Ok(side(&self.y, m1)? + side(&self.z, m2)?)
    }

    pub fn coverage(&self, e: ElementId) -> u64 {
        self.y
            .iter()
            .chain(&self.z)
            .filter(|(s, _)| s.contains(e))
            .map(|(_, v)| v)
            .sum()
    }

    /// First element of `domain` covered less than once, if any.
    pub fn uncovered(&self, domain: &ElementSet) -> Option<ElementId> {
        domain.iter().find(|&e| self.coverage(e) < 1)
    }
}

/// Checks `y'`, `z'` are chains and cover every support element at least `w(e)` times.
pub fn check_weighted_feasible(
    yp: &ChainDual,
    zp: &ChainDual,
    inst: &IntegerWeightedInstance,
) -> Result<()> {
    yp.validate()?;
    zp.validate()?;
    for (s, _) in yp.entries.iter().chain(&zp.entries) {
        if !s.is_subset(&inst.support) {
            return Err(Error::Precondition("dual set leaves the support".into()));
        }
    }
    for e in &inst.support {
        if yp.coverage(e) + zp.coverage(e) < inst.weights[e.index()] {
            return Err(Error::Precondition(format!(
                "element {e} is covered fewer than w(e) times"
            )));
        }
    }
    Ok(())
}

/// Lifts integral chain duals of the weighted instance to duals of the unfolded pair.
///
/// For chain entry `i` of `y'` and each `f` in its block of the running value sum, `y` puts
/// value 1 on `{e_f : e ∈ S^i, w(e) >= f}`. `z'` lifts the same way with copy index
/// `w(e) + 1 - f`, so `y` covers copies from the bottom and `z` from the top.
pub fn unweighted_dual(yp: &ChainDual, zp: &ChainDual, u: &UnfoldedInstance) -> Result<DualPair> {
    let inst = &u.source;
    check_weighted_feasible(yp, zp, inst)?;
    let lift = |chain: &ChainDual, top: bool| -> Vec<(ElementSet, u64)> {
        let mut out = Vec::new();
        let mut offset = 0u64;
        for (s, v) in &chain.entries {
            for f in offset + 1..=offset + v {
                let set: ElementSet = s
                    .iter()
                    .filter(|e| inst.weights[e.index()] >= f)
                    .map(|e| {
                        let w = inst.weights[e.index()];
                        u.copy(e, if top { w + 1 - f } else { f } as u32)
                    })
                    .collect();
                if !set.is_empty() {
                    out.push((set, 1));
                }
            }
            offset += v;
        }
        out
    };
    Ok(DualPair {
        y: lift(yp, false),
        z: lift(zp, true),
    })
}

pub const CHAIN_DUAL_MAX_ELEMENTS: usize = 5;
pub const CHAIN_DUAL_MAX_WEIGHT: u64 = 4;

/// Optimal integral chain duals by search over coverage profiles.
///
/// A chain dual is fixed by its coverage `c_y`, with `0 <= c_y(e) <= w(e)` and the levels
/// `{c_y >= t}` as its sets; the cheapest matching `z'` is `c_z = w - c_y`. Every profile is
/// scored and the first minimum kept. The result is checked against the brute-force
/// optimum; a mismatch is a contract violation.
pub fn brute_force_chain_duals(
    inst: &IntegerWeightedInstance,
) -> Result<(ChainDual, ChainDual, u64)> {
    let elems: Vec<ElementId> = inst.support.iter().collect();
    if elems.len() > CHAIN_DUAL_MAX_ELEMENTS || inst.max_weight > CHAIN_DUAL_MAX_WEIGHT {
        return Err(Error::Budget(format!(
            "chain dual search needs n <= {CHAIN_DUAL_MAX_ELEMENTS} and W <= {CHAIN_DUAL_MAX_WEIGHT}"
        )));
    }
    let w: Vec<u64> = elems.iter().map(|e| inst.weights[e.index()]).collect();
    let mut rank_cache: [HashMap<ElementSet, u64>; 2] = Default::default();
    let mut level_cost = |c: &[u64], side: usize| -> Result<u64> {
        let m: &dyn MatroidOracle = if side == 0 { &*inst.m1 } else { &*inst.m2 };
        let mut total = 0;
        for t in 1..=c.iter().copied().max().unwrap_or(0) {
            let level: ElementSet = elems
                .iter()
                .zip(c)
                .filter(|(_, &ce)| ce >= t)
                .map(|(e, _)| *e)
                .collect();
            let r = match rank_cache[side].get(&level) {
                Some(&r) => r,
                None => {
                    let r = m.rank(&level)? as u64;
                    rank_cache[side].insert(level, r);
                    r
                }
            };
            total += r;
        }
        Ok(total)
    };

    let mut cy = vec![0u64; elems.len()];
    let mut best: Option<(u64, Vec<u64>)> = None;
    loop {
        let cz: Vec<u64> = w.iter().zip(&cy).map(|(we, c)| we - c).collect();
        let g = level_cost(&cy, 0)? + level_cost(&cz, 1)?;
        if best.as_ref().is_none_or(|(b, _)| g < *b) {
            best = Some((g, cy.clone()));
        }
        // Odometer over the profile box.
        let mut k = 0;
        while k < cy.len() && cy[k] == w[k] {
            cy[k] = 0;
            k += 1;
        }
        if k == cy.len() {
            break;
        }
        cy[k] += 1;
    }
    let (g, cy) = best.expect("at least one profile");
    let cz: Vec<u64> = w.iter().zip(&cy).map(|(we, c)| we - c).collect();
    let yp = ChainDual::from_coverage(&elems, &cy);
    let zp = ChainDual::from_coverage(&elems, &cz);

    let (opt, _) = brute_force_opt(&inst.to_weighted())?;
    if crate::rational::int(g as i64) != opt {
        return Err(Error::ContractViolation(format!(
            "best chain dual value {g} differs from the primal optimum {}",
            crate::rational::format(&opt)
        )));
    }
    Ok((yp, zp, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures;
    use crate::rational::int;
    use crate::reduction::unfold::unfold;

    fn integer(spec: crate::instance::InstanceSpec) -> IntegerWeightedInstance {
        IntegerWeightedInstance::from_weighted(&spec.build().unwrap()).unwrap()
    }

    #[test]
    fn single_free_element() {
        let inst = integer(fixtures::single(int(3)));
        let u = unfold(&inst).unwrap();
        let yp = ChainDual {
            entries: vec![(ElementSet::from_ids([0]), 3)],
        };
        let out = unweighted_dual(&yp, &ChainDual::default(), &u).unwrap();
        assert_eq!(
            out.y,
            vec![
                (ElementSet::from_ids([0]), 1),
                (ElementSet::from_ids([1]), 1),
                (ElementSet::from_ids([2]), 1)
            ]
        );
        assert!(out.z.is_empty());
        assert_eq!(out.uncovered(&u.m1.domain()), None);
        assert_eq!(out.objective(&*u.m1, &*u.m2).unwrap(), 3);
        assert_eq!(
            chain_objective(&yp, &ChainDual::default(), &*inst.m1, &*inst.m2).unwrap(),
            3
        );

        let (y, z, g) = brute_force_chain_duals(&inst).unwrap();
        assert_eq!(g, 3);
        assert_eq!(y.entries.len() + z.entries.len(), 1);
    }

    #[test]
    fn unit_weights_rename_copies_only() {
        let mut spec = fixtures::e1();
        spec.weights = vec![int(1); 3];
        let inst = integer(spec);
        let u = unfold(&inst).unwrap();
        let (yp, zp, _) = brute_force_chain_duals(&inst).unwrap();
        let out = unweighted_dual(&yp, &zp, &u).unwrap();
        let renamed = |c: &ChainDual| -> Vec<(ElementSet, u64)> {
            c.entries.iter().map(|(s, v)| (u.lift(s), *v)).collect()
        };
        // With W = 1 every chain value is 1 and each set maps to its own copies.
        assert_eq!(out.y, renamed(&yp));
        assert_eq!(out.z, renamed(&zp));
    }

    #[test]
    fn e1_duals_match_the_optimum() {
        let inst = integer(fixtures::e1());
        let (yp, zp, g) = brute_force_chain_duals(&inst).unwrap();
        assert_eq!(g, 4);
        let u = unfold(&inst).unwrap();
        let out = unweighted_dual(&yp, &zp, &u).unwrap();
        assert_eq!(out.uncovered(&u.m1.domain()), None);
        assert_eq!(out.objective(&*u.m1, &*u.m2).unwrap(), 4);
    }

    #[test]
    fn empty_instance_has_empty_duals() {
        let (y, z, g) = brute_force_chain_duals(&integer(fixtures::empty())).unwrap();
        assert_eq!((y.entries.len(), z.entries.len(), g), (0, 0, 0));
    }

    #[test]
    fn infeasible_or_non_chain_inputs_are_rejected() {
        let inst = integer(fixtures::e1());
        let u = unfold(&inst).unwrap();
        let short = ChainDual {
            entries: vec![(ElementSet::from_ids([0, 1, 2]), 1)],
        };
        assert!(matches!(
            unweighted_dual(&short, &ChainDual::default(), &u),
            Err(Error::Precondition(_))
        ));
        let crossing = ChainDual {
            entries: vec![
                (ElementSet::from_ids([0, 1]), 3),
                (ElementSet::from_ids([2]), 1),
            ],
        };
        assert!(matches!(
            unweighted_dual(&crossing, &ChainDual::default(), &u),
            Err(Error::Precondition(_))
        ));
    }
}
