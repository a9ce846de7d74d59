//! Structural transforms from weighted to unweighted instances.

pub mod brute;
pub mod duals;
pub mod merge;
pub mod rounding;
pub mod spread;
pub mod unfold;

pub use brute::{brute_force_max_cardinality, brute_force_opt, brute_force_opt_with_budget};
pub use duals::{brute_force_chain_duals, chain_objective, unweighted_dual, ChainDual, DualPair};
pub use merge::{greedy_merge, merge_factor, MergeClass};
pub use rounding::{rescale_round, Rounded, RoundingParams};
pub use spread::{spread_decompose, SpreadDecomposition, SpreadGeometry, SpreadIndex, WeightClass};
pub use unfold::{
    refold, unfold, unfold_with_budget, Side, UnfoldedInstance, UnfoldedOracle, Unfolding,
};
