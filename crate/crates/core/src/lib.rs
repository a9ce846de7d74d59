//! Weighted matroid intersection through unweighted solvers.
//!
//! The crate reduces a weighted instance to integer-weighted classes, unfolds each class
//! into an unweighted instance, solves it with a pluggable solver, and folds the answer
//! back. Every oracle call, stored element, pass and message element is metered.

pub mod bench;
pub mod error;
pub mod generate;
pub mod instance;
pub mod ledger;
pub mod matroid;
pub mod models;
pub mod order;
pub mod rational;
pub mod reduction;
pub mod set;
pub mod solvers;
pub mod suites;

pub use error::{Error, Result};
pub use instance::{InstanceSpec, IntegerWeightedInstance, WeightedInstance};
pub use ledger::{LedgerSnapshot, ResourceLedger};
pub use matroid::{MatroidKind, MatroidOracle, Oracle};
pub use rational::Rational;
pub use set::{ElementId, ElementSet};
