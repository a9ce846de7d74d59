use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::{check_range, MatroidKind, MatroidOracle, Oracle};
use crate::error::{Error, Result};
use crate::ledger::ResourceLedger;
use crate::set::ElementSet;

/// `inner | mask` with original ids. One delegated call per query.
pub struct Restriction {
    inner: Oracle,
    mask: ElementSet,
}

impl Restriction {
    pub fn new(inner: Oracle, mask: ElementSet) -> Result<Self> {
        if !mask.is_subset(&inner.domain()) {
            return Err(Error::Input(
                "restriction mask outside the oracle's domain".into(),
            ));
        }
        Ok(Restriction { inner, mask })
    }

    fn check(&self, set: &ElementSet) -> Result<()> {
        check_range(set, self.inner.ground_size())?;
        match set.difference(&self.mask).iter().next() {
            Some(e) => Err(Error::Input(format!(
                "element {e} is outside the restriction"
            ))),
            None => Ok(()),
        }
    }
}

impl MatroidOracle for Restriction {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }
    fn kind(&self) -> MatroidKind {
        MatroidKind::Restriction
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        self.inner.ledger()
    }
    fn domain(&self) -> ElementSet {
        self.mask.clone()
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        self.check(set)?;
        self.inner.is_independent(set)
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        self.check(set)?;
        self.inner.rank(set)
    }
}

/// `inner / contracted` over the remaining ids. `I` is independent iff `I ∪ B` is,
/// where `B` is the lowest-id greedy base of the contracted set.
pub struct Contraction {
    inner: Oracle,
    contracted: ElementSet,
    base: ElementSet,
    domain: ElementSet,
}

impl Contraction {
    pub fn new(inner: Oracle, contracted: ElementSet) -> Result<Self> {
        let full = inner.domain();
        if !contracted.is_subset(&full) {
            return Err(Error::Input(
                "contracted set outside the oracle's domain".into(),
            ));
        }
        let mut base = ElementSet::new();
        for e in &contracted {
            let candidate = base.with(e);
            if inner.is_independent(&candidate)? {
                base = candidate;
            }
        }
        let domain = full.difference(&contracted);
        Ok(Contraction {
            inner,
            contracted,
            base,
            domain,
        })
    }

    pub fn fixed_base(&self) -> &ElementSet {
        &self.base
    }

    fn check(&self, set: &ElementSet) -> Result<()> {
        check_range(set, self.inner.ground_size())?;
        match set.intersection(&self.contracted).iter().next() {
            Some(e) => Err(Error::Input(format!("element {e} was contracted"))),
            None => Ok(()),
        }
    }
}

impl MatroidOracle for Contraction {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }
    fn kind(&self) -> MatroidKind {
        MatroidKind::Contraction
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        self.inner.ledger()
    }
    fn domain(&self) -> ElementSet {
        self.domain.clone()
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        self.check(set)?;
        self.inner.is_independent(&set.union(&self.base))
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        self.check(set)?;
        Ok(self.inner.rank(&set.union(&self.base))? - self.base.len())
    }
}

/// Rejects any query that touches ids outside `allowed`, counting each rejection.
pub struct GuardedOracle {
    inner: Oracle,
    allowed: ElementSet,
    violations: AtomicU64,
}

impl GuardedOracle {
    pub fn new(inner: Oracle, allowed: ElementSet) -> Self {
        GuardedOracle {
            inner,
            allowed,
            violations: AtomicU64::new(0),
        }
    }

    pub fn violations(&self) -> u64 {
        self.violations.load(Ordering::Relaxed)
    }

    fn check(&self, set: &ElementSet) -> Result<()> {
        check_range(set, self.inner.ground_size())?;
        match set.difference(&self.allowed).iter().next() {
            Some(e) => {
                self.violations.fetch_add(1, Ordering::Relaxed);
                Err(Error::ProtocolViolation(format!(
                    "query touches element {e} that was never disclosed"
                )))
            }
            None => Ok(()),
        }
    }
}

impl MatroidOracle for GuardedOracle {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }
    fn kind(&self) -> MatroidKind {
        MatroidKind::Guarded
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        self.inner.ledger()
    }
    fn domain(&self) -> ElementSet {
        self.allowed.intersection(&self.inner.domain())
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        self.check(set)?;
        self.inner.is_independent(set)
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        self.check(set)?;
        self.inner.rank(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::{GraphicMatroid, UniformMatroid};

    #[test]
    fn views_delegate_exactly_one_call() {
        let ledger = Arc::new(ResourceLedger::new());
        let g: Oracle =
            Arc::new(GraphicMatroid::new(3, vec![(0, 1), (1, 2), (0, 2)], ledger.clone()).unwrap());
        let r = Restriction::new(g.clone(), ElementSet::from_ids([0, 1])).unwrap();
        let c = Contraction::new(g.clone(), ElementSet::from_ids([0])).unwrap();
        let before = ledger.snapshot();
        r.is_independent(&ElementSet::from_ids([0, 1])).unwrap();
        r.rank(&ElementSet::from_ids([0])).unwrap();
        c.is_independent(&ElementSet::from_ids([1, 2])).unwrap();
        c.rank(&ElementSet::from_ids([1, 2])).unwrap();
        let d = ledger.snapshot().since(&before);
        assert_eq!((d.independence_calls, d.rank_calls), (2, 2));
        assert_eq!(c.rank(&ElementSet::from_ids([1, 2])).unwrap(), 1);
    }

    #[test]
    fn guard_counts_violations() {
        let u: Oracle = Arc::new(UniformMatroid::new(4, 2, Arc::default()));
        let g = GuardedOracle::new(u, ElementSet::from_ids([0, 1]));
        assert!(g.is_independent(&ElementSet::from_ids([0, 1])).unwrap());
        assert!(matches!(
            g.rank(&ElementSet::from_ids([2])),
            Err(Error::ProtocolViolation(_))
        ));
        assert_eq!(g.violations(), 1);
    }
}
