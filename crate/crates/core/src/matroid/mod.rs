//! Matroid oracles over a dense id space.

mod families;
mod verify;
mod views;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use families::{GraphicMatroid, LinearMatroidGf2, PartitionMatroid, UniformMatroid};
pub use verify::{
    check_circuit_elimination, max_independent_subset_ranks, verify_matroid_axioms, AxiomReport,
    AxiomViolation, CorruptedOracle, DEFAULT_AXIOM_BUDGET,
};
pub use views::{Contraction, GuardedOracle, Restriction};

use crate::error::{Error, Result};
use crate::ledger::ResourceLedger;
use crate::set::{ElementId, ElementSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatroidKind {
    Uniform,
    Partition,
    Graphic,
    LinearGf2,
    Unfolded,
    Restriction,
    Contraction,
    Guarded,
    Corrupted,
}

/// Independence and rank oracle.
///
/// Base families count one call per query in their ledger; views delegate and leave
/// the counting to the oracle they wrap. Implementations are immutable apart from the
/// ledger, so concurrent queries are safe.
pub trait MatroidOracle: Send + Sync {
    /// Size of the id space. Masked views keep the id space of their source.
    fn ground_size(&self) -> usize;
    fn kind(&self) -> MatroidKind;
    fn ledger(&self) -> &Arc<ResourceLedger>;
    /// Ids this oracle accepts in queries.
    fn domain(&self) -> ElementSet;
    fn is_independent(&self, set: &ElementSet) -> Result<bool>;
    fn rank(&self, set: &ElementSet) -> Result<usize>;
}

pub type Oracle = Arc<dyn MatroidOracle>;

pub(crate) fn check_range(set: &ElementSet, n: usize) -> Result<()> {
    match set.first_outside(n) {
        Some(e) => Err(Error::OutOfRange { id: e.0, size: n }),
        None => Ok(()),
    }
}

pub fn is_independent(m: &dyn MatroidOracle, set: &ElementSet) -> Result<bool> {
    m.is_independent(set)
}

pub fn rank(m: &dyn MatroidOracle, set: &ElementSet) -> Result<usize> {
    m.rank(set)
}

/// Masked restriction `m | s`; ids are preserved.
pub fn restrict(m: Oracle, s: &ElementSet) -> Result<Oracle> {
    Ok(Arc::new(Restriction::new(m, s.clone())?))
}

/// Contraction `m / s` with a lowest-id greedy base of `s` fixed at construction.
pub fn contract(m: Oracle, s: &ElementSet) -> Result<Oracle> {
    Ok(Arc::new(Contraction::new(m, s.clone())?))
}

/// The unique circuit of `i + e`, found with one removal probe per member of `i`.
pub fn fundamental_circuit(
    m: &dyn MatroidOracle,
    i: &ElementSet,
    e: ElementId,
) -> Result<ElementSet> {
    if i.contains(e) {
        return Err(Error::Precondition(format!(
            "element {e} already in the independent set"
        )));
    }
    if !m.is_independent(i)? {
        return Err(Error::Precondition("base set is dependent".into()));
    }
    let with_e = i.with(e);
    if m.is_independent(&with_e)? {
        return Err(Error::Precondition(format!(
            "adding {e} keeps the set independent"
        )));
    }
    let mut circuit = ElementSet::singleton(e);
    for x in i.iter() {
        if m.is_independent(&with_e.without(x))? {
            circuit.insert(x);
        }
    }
    Ok(circuit)
}

/// `true` iff `set` is independent in both oracles.
pub fn is_common_independent(
    m1: &dyn MatroidOracle,
    m2: &dyn MatroidOracle,
    set: &ElementSet,
) -> Result<bool> {
    Ok(m1.is_independent(set)? && m2.is_independent(set)?)
}
