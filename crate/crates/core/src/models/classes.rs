//! Class bookkeeping shared by the streaming and communication wrappers.
//!
//! Both parties (or the single streaming pass) know only an a-priori weight range
//! `[lo, hi]`, so class boundaries are computed from `lo` alone and every class keeps its
//! own unfolding.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::WeightedInstance;
use crate::ledger::ResourceLedger;
use crate::matroid::{is_common_independent, restrict, Oracle};
use crate::rational::{self, Rational};
use crate::reduction::merge::total_weight;
use crate::reduction::{
    greedy_merge, merge_factor, MergeClass, Side, SpreadGeometry, UnfoldedOracle, Unfolding,
};
use crate::set::{ElementId, ElementSet};
use crate::solvers::pipeline::{auction_factor, class_unit, extract, integer_factor, Extraction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ClassKey {
    pub i: u64,
    pub l: i64,
}

/// Spread classes over a declared weight range.
#[derive(Clone, Debug)]
pub struct ClassGrid {
    geo: SpreadGeometry,
    lo: Rational,
    hi: Rational,
    cap: u64,
}

impl ClassGrid {
    pub fn new(eps: &Rational, lo: &Rational, hi: &Rational, cap: u64) -> Result<Self> {
        if lo > hi || *lo <= Rational::from_integer(0.into()) {
            return Err(Error::Input(
                "weight range must satisfy 0 < min <= max".into(),
            ));
        }
        Ok(ClassGrid {
            geo: SpreadGeometry::new(eps)?,
            lo: lo.clone(),
            hi: hi.clone(),
            cap,
        })
    }

    pub fn epsilon(&self) -> &Rational {
        &self.geo.epsilon
    }

    /// Classes containing weight `w`, one per spread index that keeps it.
    pub fn memberships(&self, w: &Rational) -> Vec<ClassKey> {
        let k = self.geo.exponent(&(w / &self.lo));
        (1..=self.geo.beta)
            .filter_map(|i| self.geo.class_of(k, i).map(|l| ClassKey { i, l }))
            .collect()
    }

    /// Every class that can hold a weight of the declared range.
    pub fn all_keys(&self) -> Vec<ClassKey> {
        let k_max = self.geo.exponent(&(&self.hi / &self.lo));
        let mut keys: Vec<ClassKey> = (0..=k_max)
            .flat_map(|k| {
                (1..=self.geo.beta)
                    .filter_map(move |i| self.geo.class_of(k, i).map(|l| ClassKey { i, l }))
            })
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }

    /// Class interval on the original scale.
    pub fn interval(&self, key: ClassKey) -> (Rational, Rational) {
        let (a, b) = self.geo.interval(key.i, key.l);
        (a * &self.lo, b * &self.lo)
    }

    /// Integer unit from the class interval clamped to the declared range.
    pub fn unit(&self, key: ClassKey) -> Rational {
        let (a, b) = self.interval(key);
        let lo = if a > self.lo { a } else { self.lo.clone() };
        let hi = if b < self.hi { b } else { self.hi.clone() };
        class_unit(&lo, &hi, &self.geo.epsilon, self.cap)
    }
}

/// Constant-size summary of the weights a class has seen.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ClassStats {
    #[serde(with = "opt_rational")]
    pub lo: Option<Rational>,
    #[serde(with = "opt_rational")]
    pub hi: Option<Rational>,
    pub count: usize,
}

impl ClassStats {
    pub fn observe(&mut self, w: &Rational) {
        if self.lo.as_ref().is_none_or(|lo| w < lo) {
            self.lo = Some(w.clone());
        }
        if self.hi.as_ref().is_none_or(|hi| w > hi) {
            self.hi = Some(w.clone());
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &ClassStats) {
        if let Some(lo) = &other.lo {
            if self.lo.as_ref().is_none_or(|x| lo < x) {
                self.lo = Some(lo.clone());
            }
        }
        if let Some(hi) = &other.hi {
            if self.hi.as_ref().is_none_or(|x| hi > x) {
                self.hi = Some(hi.clone());
            }
        }
        self.count += other.count;
    }
}

mod opt_rational {
    use serde::Serializer;

    use crate::rational::{self, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&rational::format(r)),
            None => s.serialize_none(),
        }
    }
}

/// An unfolding that grows as elements arrive, with both unfolded oracles.
pub struct UnfoldedPair {
    pub unfolding: Arc<Unfolding>,
    pub m1: Oracle,
    pub m2: Oracle,
    pub ledger: Arc<ResourceLedger>,
}

impl UnfoldedPair {
    pub fn new(base1: &Oracle, base2: &Oracle, budget: usize) -> Self {
        let unfolding = Arc::new(Unfolding::new(budget));
        let ledger = Arc::new(ResourceLedger::new());
        let m1: Oracle = Arc::new(UnfoldedOracle::new(
            unfolding.clone(),
            base1.clone(),
            Side::First,
            ledger.clone(),
        ));
        let m2: Oracle = Arc::new(UnfoldedOracle::new(
            unfolding.clone(),
            base2.clone(),
            Side::Second,
            ledger.clone(),
        ));
        UnfoldedPair {
            unfolding,
            m1,
            m2,
            ledger,
        }
    }

    /// Copies of `e` at integer weight `w`, registering them on first sight.
    pub fn copies(&self, e: ElementId, w: u64) -> Result<Vec<ElementId>> {
        let w32 = u32::try_from(w).map_err(|_| Error::Budget("class weight exceeds u32".into()))?;
        let first = self.unfolding.register(e, w32)?;
        Ok((0..w32).map(|j| ElementId(first.0 + j)).collect())
    }
}

/// Integer class weight `floor(w / unit)`.
pub fn class_weight(w: &Rational, unit: &Rational) -> Result<u64> {
    rational::floor_u64(&(w / unit))
}

/// One class's unweighted solution, ready for refolding.
pub struct ClassOutcome {
    pub key: ClassKey,
    pub unit: Rational,
    pub stats: ClassStats,
    pub pair: UnfoldedPair,
    pub solution: ElementSet,
}

/// `alpha * spread * merge * class`: the static bound without the rounding stage.
#[derive(Clone, Debug, Serialize)]
pub struct ModelBound {
    #[serde(with = "rational::serde_rational")]
    pub alpha: Rational,
    #[serde(with = "rational::serde_rational")]
    pub spread: Rational,
    #[serde(with = "rational::serde_rational")]
    pub merge: Rational,
    #[serde(with = "rational::serde_rational")]
    pub class: Rational,
    #[serde(with = "rational::serde_rational")]
    pub product: Rational,
    pub product_f64: f64,
    /// `c` with `product = alpha (1 - c eps)`.
    #[serde(with = "rational::serde_rational")]
    pub constant: Rational,
}

impl ModelBound {
    fn new(alpha: Rational, eps: &Rational, class: Rational) -> Self {
        let spread = Rational::one() - eps;
        let merge = merge_factor(eps);
        let product = &alpha * &spread * &merge * &class;
        let constant = (Rational::one() - &product / &alpha) / eps;
        ModelBound {
            product_f64: rational::to_f64(&product),
            alpha,
            spread,
            merge,
            class,
            product,
            constant,
        }
    }
}

pub struct Finished {
    pub set: ElementSet,
    pub bound: ModelBound,
    pub chosen_index: Option<u64>,
    pub classes: usize,
}

pub struct FinishConfig<'a> {
    pub m1: &'a Oracle,
    pub m2: &'a Oracle,
    /// Weights of every element that may appear in a class solution.
    pub weights: &'a [Rational],
    pub alpha: Rational,
    pub epsilon: &'a Rational,
    pub extraction: Extraction,
    pub check_invariants: bool,
}

/// Refold each class solution, extract a heavy common independent set, merge the classes
/// of each spread index from the heaviest down, and keep the heaviest index.
pub fn finish(
    outcomes: Vec<ClassOutcome>,
    grid: &ClassGrid,
    cfg: &FinishConfig<'_>,
) -> Result<Finished> {
    let eps = cfg.epsilon;
    let mut by_index: BTreeMap<u64, Vec<(ClassKey, ElementSet)>> = BTreeMap::new();
    let mut class_factor: Option<Rational> = None;
    let classes = outcomes.len();
    for o in outcomes {
        if !is_common_independent(&*o.pair.m1, &*o.pair.m2, &o.solution)? {
            return Err(Error::ContractViolation(format!(
                "class ({}, {}) solution is dependent",
                o.key.i, o.key.l
            )));
        }
        let refolded = o.pair.unfolding.refold(&o.solution)?;
        let (lo, hi) = match (&o.stats.lo, &o.stats.hi) {
            (Some(lo), Some(hi)) => (lo.clone(), hi.clone()),
            _ => continue,
        };
        let max_weight = class_weight(&hi, &o.unit)?;
        let factor = integer_factor(&o.unit, &lo, &hi, o.stats.count)
            * match cfg.extraction {
                Extraction::Auction => auction_factor(eps, max_weight),
                Extraction::Exhaustive => Rational::one(),
            };
        if class_factor.as_ref().is_none_or(|f| factor < *f) {
            class_factor = Some(factor);
        }

        let mut int_weights = vec![Rational::from_integer(0.into()); cfg.weights.len()];
        for e in &refolded {
            int_weights[e.index()] =
                Rational::from_integer(class_weight(&cfg.weights[e.index()], &o.unit)?.into());
        }
        let inst = WeightedInstance::new(
            restrict(cfg.m1.clone(), &refolded)?,
            restrict(cfg.m2.clone(), &refolded)?,
            int_weights,
        )?;
        let extracted = extract(&inst, max_weight, eps, cfg.extraction, cfg.check_invariants)?;
        by_index
            .entry(o.key.i)
            .or_default()
            .push((o.key, extracted.set));
    }

    let mut best: Option<(u64, ElementSet, Rational)> = None;
    for (i, mut sets) in by_index {
        sets.sort_by_key(|s| std::cmp::Reverse(s.0.l));
        let merge_input: Vec<MergeClass> = sets
            .into_iter()
            .map(|(key, set)| {
                let (lower, upper) = grid.interval(key);
                MergeClass { lower, upper, set }
            })
            .collect();
        let merged = greedy_merge(&merge_input, &**cfg.m1, &**cfg.m2, cfg.weights)?;
        let w = total_weight(&merged, cfg.weights);
        if best.as_ref().is_none_or(|b| w > b.2) {
            best = Some((i, merged, w));
        }
    }
    let class = class_factor.unwrap_or_else(Rational::one);
    Ok(Finished {
        chosen_index: best.as_ref().map(|b| b.0),
        set: best.map(|b| b.1).unwrap_or_default(),
        bound: ModelBound::new(cfg.alpha.clone(), eps, class),
        classes,
    })
}

/// `{e}` is independent in both matroids.
pub fn is_usable(m1: &Oracle, m2: &Oracle, e: ElementId) -> Result<bool> {
    let s = ElementSet::singleton(e);
    Ok(m1.is_independent(&s)? && m2.is_independent(&s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn grid_matches_spread_geometry() {
        let grid = ClassGrid::new(&ratio(1, 2), &int(1), &int(64), 8).unwrap();
        // beta = 2: exponent 0 is kept at i = 1 only; exponent 6 (w = 64) at i = 1 only.
        assert_eq!(grid.memberships(&int(1)), vec![ClassKey { i: 1, l: 0 }]);
        assert_eq!(grid.memberships(&int(2)).len(), 1);
        assert!(grid.all_keys().contains(&ClassKey { i: 2, l: 1 }));
        let (a, b) = grid.interval(ClassKey { i: 1, l: 0 });
        assert!(a <= int(1) && int(1) < b);
    }

    #[test]
    fn stats_merge() {
        let mut a = ClassStats::default();
        a.observe(&int(3));
        a.observe(&int(5));
        let mut b = ClassStats::default();
        b.observe(&int(1));
        a.merge(&b);
        assert_eq!((a.lo, a.hi, a.count), (Some(int(1)), Some(int(5)), 3));
    }
}
