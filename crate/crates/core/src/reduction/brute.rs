//! Exhaustive reference solvers for small instances.

use crate::error::{Error, Result};
use crate::instance::WeightedInstance;
use crate::matroid::MatroidOracle;
use crate::rational::{self, Rational};
use crate::set::{ElementId, ElementSet};

pub const DEFAULT_BRUTE_FORCE_BUDGET: usize = 20;

/// Maximum-weight common independent set by enumeration, ties broken toward the
/// lexicographically smallest sorted id list. Refuses supports above 20 elements.
pub fn brute_force_opt(inst: &WeightedInstance) -> Result<(Rational, ElementSet)> {
    brute_force_opt_with_budget(inst, DEFAULT_BRUTE_FORCE_BUDGET)
}

pub fn brute_force_opt_with_budget(
    inst: &WeightedInstance,
    budget: usize,
) -> Result<(Rational, ElementSet)> {
    let n = inst.support.len();
    if n > budget {
        return Err(Error::Budget(format!(
            "brute force over {n} elements exceeds budget {budget}"
        )));
    }
    let elems: Vec<ElementId> = inst.support.iter().collect();
    let den = rational::common_denominator(elems.iter().map(|e| inst.weight(*e)));
    let w: Vec<i128> = elems
        .iter()
        .map(|e| rational::scaled_i128(inst.weight(*e), &den))
        .collect::<Result<_>>()?;
    let (best, set) = search(&*inst.m1, &*inst.m2, &elems, &w)?;
    Ok((Rational::new(best.into(), den), set))
}

/// Maximum-cardinality common independent set of two oracles over their shared domain.
pub fn brute_force_max_cardinality(
    m1: &dyn MatroidOracle,
    m2: &dyn MatroidOracle,
    budget: usize,
) -> Result<(usize, ElementSet)> {
    let elems: Vec<ElementId> = m1.domain().intersection(&m2.domain()).iter().collect();
    if elems.len() > budget {
        return Err(Error::Budget(format!(
            "brute force over {} elements exceeds budget {budget}",
            elems.len()
        )));
    }
    let (best, set) = search(m1, m2, &elems, &vec![1; elems.len()])?;
    Ok((best as usize, set))
}

struct Search<'a> {
    m1: &'a dyn MatroidOracle,
    m2: &'a dyn MatroidOracle,
    elems: &'a [ElementId],
    w: &'a [i128],
    suffix: Vec<i128>,
    best: i128,
    best_ids: Vec<u32>,
}

fn search(
    m1: &dyn MatroidOracle,
    m2: &dyn MatroidOracle,
    elems: &[ElementId],
    w: &[i128],
) -> Result<(i128, ElementSet)> {
    let mut suffix = vec![0i128; elems.len() + 1];
    for k in (0..elems.len()).rev() {
        suffix[k] = suffix[k + 1] + w[k].max(0);
    }
    let mut s = Search {
        m1,
        m2,
        elems,
        w,
        suffix,
        best: 0,
        best_ids: Vec::new(),
    };
    let mut current = ElementSet::new();
    let mut ids = Vec::new();
    s.dfs(0, &mut current, &mut ids, 0)?;
    Ok((s.best, ElementSet::from_ids(s.best_ids)))
}

impl Search<'_> {
    fn dfs(
        &mut self,
        from: usize,
        current: &mut ElementSet,
        ids: &mut Vec<u32>,
        value: i128,
    ) -> Result<()> {
        // Pre-order visits sets in lexicographic order, so the first maximizer is the smallest.
        if value > self.best {
            self.best = value;
            self.best_ids = ids.clone();
        }
        for k in from..self.elems.len() {
            if value + self.suffix[k] <= self.best {
                return Ok(());
            }
            let e = self.elems[k];
            current.insert(e);
            if self.m1.is_independent(current)? && self.m2.is_independent(current)? {
                ids.push(e.0);
                self.dfs(k + 1, current, ids, value + self.w[k])?;
                ids.pop();
            }
            current.remove(e);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures;

    #[test]
    fn e1_optimum() {
        let (w, s) = brute_force_opt(&fixtures::e1().build().unwrap()).unwrap();
        assert_eq!(w, rational::int(4));
        assert_eq!(s, ElementSet::from_ids([0, 2]));
    }

    #[test]
    fn empty_and_figure1() {
        let (w, s) = brute_force_opt(&fixtures::empty().build().unwrap()).unwrap();
        assert_eq!((w, s), (rational::int(0), ElementSet::new()));
        let (w, s) = brute_force_opt(&fixtures::figure1().build().unwrap()).unwrap();
        assert_eq!(w, rational::int(4));
        // {a, b} and {c, d} both weigh 4; the smaller id list wins.
        assert_eq!(s, ElementSet::from_ids([0, 1]));
    }

    #[test]
    fn budget_guard() {
        let mut spec = fixtures::single(rational::int(1));
        spec.n = 21;
        spec.weights = vec![rational::int(1); 21];
        assert!(matches!(
            brute_force_opt(&spec.build().unwrap()),
            Err(Error::Budget(_))
        ));
    }
}
