use std::sync::Arc;

use serde::Serialize;

use super::{check_range, MatroidKind, MatroidOracle};
use crate::error::{Error, Result};
use crate::ledger::ResourceLedger;
use crate::set::{ElementId, ElementSet};

pub const DEFAULT_AXIOM_BUDGET: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum AxiomViolation {
    EmptySetDependent,
    /// `set` is independent but `set - dropped` is not.
    NotDownwardClosed {
        set: ElementSet,
        dropped: ElementId,
    },
    /// Both sets are independent, `larger` is bigger, and no element of `larger - smaller` extends `smaller`.
    Exchange {
        smaller: ElementSet,
        larger: ElementSet,
    },
    RankMismatch {
        set: ElementSet,
        oracle: usize,
        expected: usize,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub elements: usize,
    pub subsets_checked: u64,
    pub violation: Option<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Independence bit and max-independent-subset size for every subset of the domain.
/// Subset `mask` maps bit `j` to the `j`-th smallest domain id.
pub struct SubsetTables {
    pub domain: Vec<ElementId>,
    pub independent: Vec<bool>,
    pub rank: Vec<u8>,
}

impl SubsetTables {
    pub fn set_of(&self, mask: usize) -> ElementSet {
        mask_to_set(&self.domain, mask)
    }
}

fn mask_to_set(domain: &[ElementId], mask: usize) -> ElementSet {
    let mut s = ElementSet::new();
    let mut m = mask;
    while m != 0 {
        let j = m.trailing_zeros() as usize;
        s.insert(domain[j]);
        m &= m - 1;
    }
    s
}

/// Exhaustive tables over the oracle's domain, refusing domains larger than `budget`.
pub fn max_independent_subset_ranks(m: &dyn MatroidOracle, budget: usize) -> Result<SubsetTables> {
    let domain: Vec<ElementId> = m.domain().iter().collect();
    let k = domain.len();
    if k > budget || k >= usize::BITS as usize {
        return Err(Error::Budget(format!(
            "exhaustive check over {k} elements exceeds budget {budget}"
        )));
    }
    let total = 1usize << k;
    let mut independent = vec![false; total];
    for (mask, slot) in independent.iter_mut().enumerate() {
        *slot = m.is_independent(&mask_to_set(&domain, mask))?;
    }
    let mut rank = vec![0u8; total];
    for mask in 1..total {
        rank[mask] = if independent[mask] {
            mask.count_ones() as u8
        } else {
            bits(mask).map(|b| rank[mask ^ b]).max().unwrap_or(0)
        };
    }
    Ok(SubsetTables {
        domain,
        independent,
        rank,
    })
}

fn bits(mask: usize) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let b = m & m.wrapping_neg();
        m ^= b;
        Some(b)
    })
}

/// Exhaustive axiom check: empty set, downward closure, exchange, and agreement of the
/// rank oracle with the largest independent subset.
///
/// Exchange is checked through closures: a downward-closed family is a matroid iff every
/// independent `I` has `r(cl(I)) = |I|`, where `cl(I)` adds every `x` with `I + x`
/// dependent. A failure yields the pair `(I, B)` with `B` a largest independent subset of `cl(I)`.
pub fn verify_matroid_axioms(m: &dyn MatroidOracle, budget: usize) -> Result<AxiomReport> {
    let t = max_independent_subset_ranks(m, budget)?;
    let k = t.domain.len();
    let total = 1usize << k;
    let mut report = AxiomReport {
        elements: k,
        subsets_checked: total as u64,
        violation: None,
    };
    let full = total - 1;

    if !t.independent[0] {
        report.violation = Some(AxiomViolation::EmptySetDependent);
        return Ok(report);
    }
    for mask in 1..total {
        if !t.independent[mask] {
            continue;
        }
        if let Some(b) = bits(mask).find(|&b| !t.independent[mask ^ b]) {
            report.violation = Some(AxiomViolation::NotDownwardClosed {
                set: t.set_of(mask),
                dropped: t.domain[b.trailing_zeros() as usize],
            });
            return Ok(report);
        }
    }
    for mask in 0..total {
        if !t.independent[mask] {
            continue;
        }
        let mut closure = mask;
        for b in bits(full & !mask) {
            if !t.independent[mask | b] {
                closure |= b;
            }
        }
        if t.rank[closure] as u32 > mask.count_ones() {
            let mut larger = closure;
            while !t.independent[larger] {
                let b = bits(larger)
                    .find(|&b| t.rank[larger ^ b] == t.rank[larger])
                    .expect("rank is witnessed");
                larger ^= b;
            }
            report.violation = Some(AxiomViolation::Exchange {
                smaller: t.set_of(mask),
                larger: t.set_of(larger),
            });
            return Ok(report);
        }
    }
    for mask in 0..total {
        let set = t.set_of(mask);
        let oracle = m.rank(&set)?;
        if oracle != t.rank[mask] as usize {
            report.violation = Some(AxiomViolation::RankMismatch {
                set,
                oracle,
                expected: t.rank[mask] as usize,
            });
            return Ok(report);
        }
    }
    Ok(report)
}

/// Circuit elimination over all pairs of circuits: returns `(C1, C2, x)` when
/// `(C1 ∪ C2) - x` contains no circuit.
pub fn check_circuit_elimination(
    m: &dyn MatroidOracle,
    budget: usize,
) -> Result<Option<(ElementSet, ElementSet, ElementId)>> {
    let t = max_independent_subset_ranks(m, budget)?;
    let total = t.independent.len();
    let circuits: Vec<usize> = (1..total)
        .filter(|&mask| !t.independent[mask] && bits(mask).all(|b| t.independent[mask ^ b]))
        .collect();
    for (i, &c1) in circuits.iter().enumerate() {
        for &c2 in &circuits[i + 1..] {
            for b in bits(c1 & c2) {
                if t.independent[(c1 | c2) ^ b] {
                    let x = t.domain[b.trailing_zeros() as usize];
                    return Ok(Some((t.set_of(c1), t.set_of(c2), x)));
                }
            }
        }
    }
    Ok(None)
}

/// Negative control: claims every set except the 2-element ones is independent.
pub struct CorruptedOracle {
    n: usize,
    ledger: Arc<ResourceLedger>,
}

impl CorruptedOracle {
    pub fn new(n: usize, ledger: Arc<ResourceLedger>) -> Self {
        CorruptedOracle { n, ledger }
    }
}

impl MatroidOracle for CorruptedOracle {
    fn ground_size(&self) -> usize {
        self.n
    }
    fn kind(&self) -> MatroidKind {
        MatroidKind::Corrupted
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        &self.ledger
    }
    fn domain(&self) -> ElementSet {
        ElementSet::full(self.n)
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        check_range(set, self.n)?;
        self.ledger.record_independence(1);
        Ok(set.len() != 2)
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        check_range(set, self.n)?;
        self.ledger.record_rank(1);
        Ok(if set.len() == 2 { 1 } else { set.len() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::{GraphicMatroid, LinearMatroidGf2, PartitionMatroid, UniformMatroid};

    #[test]
    fn uniform_passes() {
        let u = UniformMatroid::new(4, 2, Arc::default());
        let r = verify_matroid_axioms(&u, DEFAULT_AXIOM_BUDGET).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.subsets_checked, 16);
    }

    #[test]
    fn corrupted_fails_with_witness() {
        let c = CorruptedOracle::new(4, Arc::default());
        let r = verify_matroid_axioms(&c, DEFAULT_AXIOM_BUDGET).unwrap();
        match r.violation {
            Some(AxiomViolation::NotDownwardClosed { set, dropped }) => {
                assert_eq!(set.len(), 3);
                assert!(set.contains(dropped));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exchange_failure_is_detected() {
        // Downward closed but not a matroid: {0,1} and {2} are both maximal.
        struct TwoBases(Arc<ResourceLedger>);
        impl MatroidOracle for TwoBases {
            fn ground_size(&self) -> usize {
                3
            }
            fn kind(&self) -> MatroidKind {
                MatroidKind::Corrupted
            }
            fn ledger(&self) -> &Arc<ResourceLedger> {
                &self.0
            }
            fn domain(&self) -> ElementSet {
                ElementSet::full(3)
            }
            fn is_independent(&self, s: &ElementSet) -> Result<bool> {
                Ok(s.is_subset(&ElementSet::from_ids([0, 1]))
                    || s.is_subset(&ElementSet::from_ids([2])))
            }
            fn rank(&self, _: &ElementSet) -> Result<usize> {
                Ok(0)
            }
        }
        let r = verify_matroid_axioms(&TwoBases(Arc::default()), 3).unwrap();
        assert_eq!(
            r.violation,
            Some(AxiomViolation::Exchange {
                smaller: ElementSet::from_ids([2]),
                larger: ElementSet::from_ids([0, 1])
            })
        );
    }

    #[test]
    fn families_pass_and_budget_is_enforced() {
        let l: Arc<ResourceLedger> = Arc::default();
        let oracles: Vec<Box<dyn MatroidOracle>> = vec![
            Box::new(PartitionMatroid::new(vec![0, 0, 1, 1, 2], vec![1, 2, 0], l.clone()).unwrap()),
            Box::new(
                GraphicMatroid::new(
                    4,
                    vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 3), (0, 3)],
                    l.clone(),
                )
                .unwrap(),
            ),
            Box::new(
                LinearMatroidGf2::from_bitstrings(
                    3,
                    &["100", "010", "110", "001", "000", "111"],
                    l.clone(),
                )
                .unwrap(),
            ),
        ];
        for o in &oracles {
            assert!(verify_matroid_axioms(o.as_ref(), DEFAULT_AXIOM_BUDGET)
                .unwrap()
                .passed());
            assert_eq!(
                check_circuit_elimination(o.as_ref(), DEFAULT_AXIOM_BUDGET).unwrap(),
                None
            );
        }
        let big = UniformMatroid::new(13, 3, l);
        assert!(matches!(
            verify_matroid_axioms(&big, DEFAULT_AXIOM_BUDGET),
            Err(Error::Budget(_))
        ));
    }
}
