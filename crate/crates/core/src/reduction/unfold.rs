//! Unfolding: element `e` of integer weight `w(e)` becomes copies `e_1, ..., e_{w(e)}`.
//!
//! Slice `i` of a copy set `I` is `{e : e_i ∈ I}` for the first matroid and
//! `{e : e_{w(e)-i+1} ∈ I}` for the second. A copy set is independent iff every slice is
//! independent in the original matroid, and its rank is the sum of slice ranks. Only
//! non-empty slices are queried, so one query costs at most `W` original calls.

use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::instance::{IntegerWeightedInstance, WeightedInstance};
use crate::ledger::ResourceLedger;
use crate::matroid::{MatroidKind, MatroidOracle, Oracle};
use crate::rational;
use crate::set::{ElementId, ElementSet};

/// Default cap on copies per original element in play.
pub const DEFAULT_COPIES_PER_ELEMENT: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

#[derive(Default)]
struct CopyTables {
    owner: Vec<u32>,
    index: Vec<u32>,
    /// Owner weight per copy.
    owner_weight: Vec<u32>,
    /// First copy id and weight per registered original.
    first: std::collections::HashMap<u32, (u32, u32)>,
    max_weight: u32,
}

/// Copy table shared by both unfolded oracles. Copies of one original are consecutive ids.
pub struct Unfolding {
    tables: RwLock<CopyTables>,
    budget: usize,
}

impl Unfolding {
    pub fn new(budget: usize) -> Self {
        Unfolding {
            tables: RwLock::new(CopyTables::default()),
            budget,
        }
    }

    /// Registers `weight` copies of `e` and returns the id of `e_1`. Re-registering with the
    /// same weight is a no-op.
    pub fn register(&self, e: ElementId, weight: u32) -> Result<ElementId> {
        if weight == 0 {
            return Err(Error::Input(format!("element {e} has weight 0")));
        }
        let mut t = self.tables.write().expect("copy table lock");
        if let Some(&(first, w)) = t.first.get(&e.0) {
            if w != weight {
                return Err(Error::Input(format!(
                    "element {e} re-registered with weight {weight} (was {w})"
                )));
            }
            return Ok(ElementId(first));
        }
        let first = t.owner.len();
        if first + weight as usize > self.budget {
            return Err(Error::Budget(format!(
                "unfolding needs more than {} copies (MATROIDX_BUDGET_COPIES)",
                self.budget
            )));
        }
        for j in 1..=weight {
            t.owner.push(e.0);
            t.index.push(j);
            t.owner_weight.push(weight);
        }
        t.first.insert(e.0, (first as u32, weight));
        t.max_weight = t.max_weight.max(weight);
        Ok(ElementId(first as u32))
    }

    pub fn copy_count(&self) -> usize {
        self.tables.read().expect("copy table lock").owner.len()
    }

    pub fn max_weight(&self) -> u32 {
        self.tables.read().expect("copy table lock").max_weight
    }

    pub fn owner(&self, c: ElementId) -> ElementId {
        ElementId(self.tables.read().expect("copy table lock").owner[c.index()])
    }

    /// 1-based copy index of `c` within its owner.
    pub fn copy_index(&self, c: ElementId) -> u32 {
        self.tables.read().expect("copy table lock").index[c.index()]
    }

    pub fn weight(&self, e: ElementId) -> Option<u32> {
        self.tables
            .read()
            .expect("copy table lock")
            .first
            .get(&e.0)
            .map(|&(_, w)| w)
    }

    /// Id of `e_j`, if registered.
    pub fn copy_id(&self, e: ElementId, j: u32) -> Option<ElementId> {
        let t = self.tables.read().expect("copy table lock");
        t.first
            .get(&e.0)
            .filter(|&&(_, w)| j >= 1 && j <= w)
            .map(|&(first, _)| ElementId(first + j - 1))
    }

    /// All copies of the originals in `s` that are registered.
    pub fn copies_of(&self, s: &ElementSet) -> ElementSet {
        let t = self.tables.read().expect("copy table lock");
        let mut out = ElementSet::new();
        for e in s {
            if let Some(&(first, w)) = t.first.get(&e.0) {
                for c in first..first + w {
                    out.insert(ElementId(c));
                }
            }
        }
        out
    }

    /// Originals owning at least one copy in `s`.
    pub fn refold(&self, s: &ElementSet) -> Result<ElementSet> {
        let t = self.tables.read().expect("copy table lock");
        if let Some(c) = s.first_outside(t.owner.len()) {
            return Err(Error::OutOfRange {
                id: c.0,
                size: t.owner.len(),
            });
        }
        Ok(s.iter().map(|c| ElementId(t.owner[c.index()])).collect())
    }

    /// Slice `i` of `s` at position `i - 1`; unused slices stay empty.
    fn slices(&self, s: &ElementSet, side: Side) -> Result<Vec<ElementSet>> {
        let t = self.tables.read().expect("copy table lock");
        if let Some(c) = s.first_outside(t.owner.len()) {
            return Err(Error::OutOfRange {
                id: c.0,
                size: t.owner.len(),
            });
        }
        let mut slices = vec![ElementSet::new(); t.max_weight as usize];
        for c in s {
            let e = t.owner[c.index()];
            let j = t.index[c.index()];
            let slice = match side {
                Side::First => j,
                Side::Second => t.owner_weight[c.index()] - j + 1,
            };
            slices[slice as usize - 1].insert(ElementId(e));
        }
        Ok(slices)
    }
}

/// One side of an unfolded pair. Its own ledger counts unfolded-level queries; the
/// wrapped oracle's ledger counts the original calls they cost.
pub struct UnfoldedOracle {
    unfolding: Arc<Unfolding>,
    base: Oracle,
    side: Side,
    ledger: Arc<ResourceLedger>,
}

impl UnfoldedOracle {
    pub fn new(
        unfolding: Arc<Unfolding>,
        base: Oracle,
        side: Side,
        ledger: Arc<ResourceLedger>,
    ) -> Self {
        UnfoldedOracle {
            unfolding,
            base,
            side,
            ledger,
        }
    }

    pub fn base(&self) -> &Oracle {
        &self.base
    }
}

impl MatroidOracle for UnfoldedOracle {
    fn ground_size(&self) -> usize {
        self.unfolding.copy_count()
    }
    fn kind(&self) -> MatroidKind {
        MatroidKind::Unfolded
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        &self.ledger
    }
    fn domain(&self) -> ElementSet {
        ElementSet::full(self.unfolding.copy_count())
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        let slices = self.unfolding.slices(set, self.side)?;
        self.ledger.record_independence(1);
        for slice in slices.iter().filter(|s| !s.is_empty()) {
            if !self.base.is_independent(slice)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        let slices = self.unfolding.slices(set, self.side)?;
        self.ledger.record_rank(1);
        let mut total = 0;
        for slice in slices.iter().filter(|s| !s.is_empty()) {
            total += self.base.rank(slice)?;
        }
        Ok(total)
    }
}

/// Lazy unfolded pair over an integer-weighted instance.
pub struct UnfoldedInstance {
    pub source: IntegerWeightedInstance,
    pub unfolding: Arc<Unfolding>,
    pub m1: Oracle,
    pub m2: Oracle,
    /// Unfolded-level query counter shared by `m1` and `m2`.
    pub ledger: Arc<ResourceLedger>,
}

impl UnfoldedInstance {
    pub fn copy_count(&self) -> usize {
        self.unfolding.copy_count()
    }

    pub fn refold(&self, s: &ElementSet) -> Result<ElementSet> {
        self.unfolding.refold(s)
    }

    /// `e_j` by owner and 1-based index.
    pub fn copy(&self, e: ElementId, j: u32) -> ElementId {
        self.unfolding.copy_id(e, j).expect("copy exists")
    }

    /// The unweighted instance over copies, every copy of weight 1.
    pub fn as_unit_instance(&self) -> Result<WeightedInstance> {
        WeightedInstance::new(
            self.m1.clone(),
            self.m2.clone(),
            vec![rational::int(1); self.copy_count()],
        )
    }

    /// Every copy of every element of a common independent set: a common independent copy
    /// set of the same value.
    pub fn lift(&self, s: &ElementSet) -> ElementSet {
        self.unfolding.copies_of(s)
    }
}

/// Unfolds with the default copy budget of `10^4` per element in play.
pub fn unfold(inst: &IntegerWeightedInstance) -> Result<UnfoldedInstance> {
    unfold_with_budget(inst, DEFAULT_COPIES_PER_ELEMENT * inst.support.len().max(1))
}

pub fn unfold_with_budget(
    inst: &IntegerWeightedInstance,
    budget: usize,
) -> Result<UnfoldedInstance> {
    let total: u64 = inst.weight_of(&inst.support);
    if total > budget as u64 {
        return Err(Error::Budget(format!(
            "unfolding needs {total} copies, budget is {budget}"
        )));
    }
    let unfolding = Arc::new(Unfolding::new(budget));
    for e in &inst.support {
        let w = u32::try_from(inst.weights[e.index()])
            .map_err(|_| Error::Budget("weight exceeds u32".into()))?;
        unfolding.register(e, w)?;
    }
    let ledger = Arc::new(ResourceLedger::new());
    let m1: Oracle = Arc::new(UnfoldedOracle::new(
        unfolding.clone(),
        inst.m1.clone(),
        Side::First,
        ledger.clone(),
    ));
    let m2: Oracle = Arc::new(UnfoldedOracle::new(
        unfolding.clone(),
        inst.m2.clone(),
        Side::Second,
        ledger.clone(),
    ));
    Ok(UnfoldedInstance {
        source: inst.clone(),
        unfolding,
        m1,
        m2,
        ledger,
    })
}

/// `{e : some copy of e is in s}`.
pub fn refold(u: &UnfoldedInstance, s: &ElementSet) -> Result<ElementSet> {
    u.refold(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures;
    use crate::reduction::brute::brute_force_opt;

    fn integer(spec: crate::instance::InstanceSpec) -> IntegerWeightedInstance {
        IntegerWeightedInstance::from_weighted(&spec.build().unwrap()).unwrap()
    }

    #[test]
    fn figure1_unfolds_to_eight_copies_with_same_optimum() {
        let u = unfold(&integer(fixtures::figure1())).unwrap();
        assert_eq!(u.copy_count(), 8);
        let owners: Vec<(u32, u32)> = (0..8)
            .map(|c| {
                (
                    u.unfolding.owner(ElementId(c)).0,
                    u.unfolding.copy_index(ElementId(c)),
                )
            })
            .collect();
        assert_eq!(
            owners,
            vec![
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 1),
                (2, 1),
                (2, 2),
                (3, 1),
                (3, 2)
            ]
        );
        let (opt, _) = brute_force_opt(&u.as_unit_instance().unwrap()).unwrap();
        assert_eq!(opt, rational::int(4));
    }

    #[test]
    fn unit_weights_are_the_identity() {
        let mut spec = fixtures::figure1();
        spec.weights = vec![rational::int(1); 4];
        let inst = integer(spec);
        let u = unfold(&inst).unwrap();
        for bits in 0u128..16 {
            let s = ElementSet::from_bits(bits);
            assert_eq!(
                u.m1.is_independent(&s).unwrap(),
                inst.m1.is_independent(&s).unwrap()
            );
            assert_eq!(u.m2.rank(&s).unwrap(), inst.m2.rank(&s).unwrap());
        }
    }

    #[test]
    fn e1_unfolded_optimum_is_four() {
        let u = unfold(&integer(fixtures::e1())).unwrap();
        assert_eq!(u.copy_count(), 6);
        assert_eq!(
            brute_force_opt(&u.as_unit_instance().unwrap()).unwrap().0,
            rational::int(4)
        );
    }

    #[test]
    fn second_side_reverses_copy_order() {
        let u = unfold(&integer(fixtures::e1())).unwrap();
        // First side: a_1 and b_1 share slice 1, where the partition allows one of {a, b}.
        let a1 = u.copy(ElementId(0), 1);
        let b1 = u.copy(ElementId(1), 1);
        let b2 = u.copy(ElementId(1), 2);
        assert!(!u
            .m1
            .is_independent(&ElementSet::from_ids([a1.0, b1.0]))
            .unwrap());
        assert!(u
            .m1
            .is_independent(&ElementSet::from_ids([a1.0, b2.0]))
            .unwrap());
        // Second side: a_3 and b_2 are both slice 1.
        let a3 = u.copy(ElementId(0), 3);
        assert_eq!(u.m2.rank(&ElementSet::from_ids([a3.0, b2.0])).unwrap(), 2);
    }

    #[test]
    fn refold_examples() {
        let u = unfold(&integer(fixtures::figure1())).unwrap();
        assert_eq!(refold(&u, &ElementSet::new()).unwrap(), ElementSet::new());
        let s = ElementSet::from_ids([
            u.copy(ElementId(0), 1).0,
            u.copy(ElementId(0), 2).0,
            u.copy(ElementId(2), 1).0,
        ]);
        assert_eq!(refold(&u, &s).unwrap(), ElementSet::from_ids([0, 2]));
        assert_eq!(
            refold(&u, &u.lift(&ElementSet::from_ids([3]))).unwrap(),
            ElementSet::from_ids([3])
        );
    }

    #[test]
    fn query_cost_is_bounded_by_nonempty_slices() {
        let inst = integer(fixtures::figure1());
        let u = unfold(&inst).unwrap();
        let base = inst.m1.ledger().clone();
        let before = base.snapshot();
        u.m1.is_independent(&ElementSet::full(8)).unwrap();
        u.m1.rank(&ElementSet::full(8)).unwrap();
        u.m1.is_independent(&ElementSet::new()).unwrap();
        let d = base.snapshot().since(&before);
        assert!(d.independence_calls <= 3);
        assert_eq!(d.rank_calls, 3);
        assert_eq!(u.ledger.independence_calls(), 2);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = integer(fixtures::figure1());
        assert!(matches!(
            unfold_with_budget(&inst, 7),
            Err(Error::Budget(_))
        ));
    }
}
