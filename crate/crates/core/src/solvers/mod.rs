//! Unweighted solvers, maximum-weight bases, the additive auction and the weighted pipeline.

pub mod auction;
pub mod base;
pub mod intersection;
pub mod pipeline;

pub use auction::{auction_additive, run_auction, AuctionConfig, AuctionOutcome, AuctionState};
pub use base::max_weight_base;
pub use intersection::{
    exact_mi, greedy_mi, solver_by_name, ExactSolver, GreedySolver, UnweightedSolver,
};
pub use pipeline::{
    weighted_mi_reduce, weighted_mi_reduce_with, BoundFactors, ClassReport, Extraction,
    IndexReport, PipelineConfig, PipelineReport,
};
