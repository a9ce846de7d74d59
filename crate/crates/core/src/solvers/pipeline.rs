//! Weighted matroid intersection through an unweighted solver.
//!
//! Stages: drop loops, rescale and round, split into spread classes, scale each class to
//! small integers, unfold, solve unweighted, refold, extract with the auction, greedily
//! merge the classes of each spread index and keep the heaviest index.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{IntegerWeightedInstance, WeightedInstance};
use crate::ledger::{LedgerSnapshot, ResourceLedger};
use crate::matroid::{is_common_independent, restrict, Oracle};
use crate::rational::{self, Rational};
use crate::reduction::merge::total_weight;
use crate::reduction::unfold::DEFAULT_COPIES_PER_ELEMENT;
use crate::reduction::{
    brute_force_opt, greedy_merge, merge_factor, rescale_round, spread_decompose,
    unfold_with_budget, MergeClass,
};
use crate::set::ElementSet;
use crate::solvers::auction::{independence_calls, run_auction, AuctionConfig};
use crate::solvers::UnweightedSolver;

/// Largest integer weight a class is scaled to (up to the `1/eps` floor).
pub const DEFAULT_CLASS_WEIGHT_CAP: u64 = 32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extraction {
    /// Additive auction with precision `eps / W^2`.
    #[default]
    Auction,
    /// Exhaustive search over the refolded set; for differential testing.
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub epsilon: Rational,
    pub class_weight_cap: u64,
    /// Unfolding copy budget per class; `None` means `10^4` per element.
    pub copy_budget: Option<usize>,
    pub extraction: Extraction,
    pub check_auction_invariants: bool,
}

impl PipelineConfig {
    pub fn new(epsilon: Rational) -> Self {
        PipelineConfig {
            epsilon,
            class_weight_cap: DEFAULT_CLASS_WEIGHT_CAP,
            copy_budget: None,
            extraction: Extraction::Auction,
            check_auction_invariants: cfg!(debug_assertions),
        }
    }
}

/// Integer scaling of one class: `w_c(e) = floor(w(e) / unit)`, zero-weight elements dropped.
#[derive(Clone, Debug)]
pub struct ClassScale {
    pub unit: Rational,
    /// Indexed by id; zero outside `kept`.
    pub weights: Vec<u64>,
    pub kept: ElementSet,
    pub max_weight: u64,
}

/// `max(eps * lo, hi / cap)`: keeps integer weights at most `max(cap, hi/(eps lo))` while
/// losing at most `unit` per element.
pub fn class_unit(lo: &Rational, hi: &Rational, eps: &Rational, cap: u64) -> Rational {
    let a = eps * lo;
    let b = hi / Rational::from_integer(cap.into());
    if a > b {
        a
    } else {
        b
    }
}

pub fn integerize(
    members: &ElementSet,
    weights: &[Rational],
    unit: &Rational,
) -> Result<ClassScale> {
    let mut out = vec![0u64; weights.len()];
    let mut kept = ElementSet::new();
    for e in members {
        let w = rational::floor_u64(&(&weights[e.index()] / unit))?;
        if w > 0 {
            out[e.index()] = w;
            kept.insert(e);
        }
    }
    let max_weight = kept.iter().map(|e| out[e.index()]).max().unwrap_or(0);
    Ok(ClassScale {
        unit: unit.clone(),
        weights: out,
        kept,
        max_weight,
    })
}

/// Lower bound on `unit * OPT(w_c) / OPT(w)` for a loop-free class with weights in
/// `[lo, hi]` (both attained) whose solutions have at most `rank_bound` elements.
///
/// Each element loses less than `unit`, so an optimum `T` keeps at least
/// `w(T) - |T| unit`, and `w(T) >= hi`, `w(T) >= |T| lo`.
pub fn integer_factor(
    unit: &Rational,
    lo: &Rational,
    hi: &Rational,
    rank_bound: usize,
) -> Rational {
    let per_element = lo.recip();
    let per_rank = Rational::from_integer(rank_bound.into()) / hi;
    let loss = if per_element < per_rank {
        per_element
    } else {
        per_rank
    };
    rational::nonneg(Rational::one() - unit * loss)
}

/// `1 - 3 eps / W`: the auction at precision `eps / W^2` loses at most `3 eps n / W`
/// and `n` is at most the optimum on a refolded set.
pub fn auction_factor(eps: &Rational, max_weight: u64) -> Rational {
    if max_weight == 0 {
        return Rational::one();
    }
    rational::nonneg(
        Rational::one()
            - Rational::from_integer(3.into()) * eps / Rational::from_integer(max_weight.into()),
    )
}

pub struct Extracted {
    pub set: ElementSet,
    pub independence_calls: u64,
    pub iterations: u64,
}

/// Heavy common independent subset of `inst` (integer weights at most `max_weight`).
pub fn extract(
    inst: &WeightedInstance,
    max_weight: u64,
    eps: &Rational,
    extraction: Extraction,
    check_invariants: bool,
) -> Result<Extracted> {
    if inst.n() == 0 {
        return Ok(Extracted {
            set: ElementSet::new(),
            independence_calls: 0,
            iterations: 0,
        });
    }
    match extraction {
        Extraction::Auction => {
            let delta = eps / Rational::from_integer((max_weight * max_weight).into());
            let out = run_auction(
                inst,
                &AuctionConfig {
                    epsilon: delta,
                    check_invariants,
                },
            )?;
            Ok(Extracted {
                set: out.set,
                independence_calls: out.independence_calls,
                iterations: out.iterations,
            })
        }
        Extraction::Exhaustive => {
            let before = independence_calls(inst.m1.ledger(), inst.m2.ledger());
            let (_, set) = brute_force_opt(inst)?;
            let after = independence_calls(inst.m1.ledger(), inst.m2.ledger());
            Ok(Extracted {
                set,
                independence_calls: after - before,
                iterations: 0,
            })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub i: u64,
    pub l: i64,
    #[serde(with = "rational::serde_rational")]
    pub lower: Rational,
    #[serde(with = "rational::serde_rational")]
    pub upper: Rational,
    pub members: ElementSet,
    #[serde(with = "rational::serde_rational")]
    pub unit: Rational,
    pub max_integer_weight: u64,
    pub copies: usize,
    pub unweighted_size: usize,
    pub refolded: ElementSet,
    pub extracted: ElementSet,
    #[serde(with = "rational::serde_rational")]
    pub integer_factor: Rational,
    #[serde(with = "rational::serde_rational")]
    pub auction_factor: Rational,
    /// Queries the solver made on the unfolded oracles.
    pub unfolded_calls: u64,
    /// Original independence calls caused by those queries.
    pub solver_calls: u64,
    pub extraction_calls: u64,
    pub auction_iterations: u64,
    /// Same member set as an earlier class; the result was reused without new queries.
    pub reused: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub i: u64,
    pub merged: ElementSet,
    /// Weight under the rounded weights.
    #[serde(with = "rational::serde_rational")]
    pub rounded_weight: Rational,
    pub merge_calls: u64,
    pub classes: Vec<ClassReport>,
}

/// The composed guarantee `alpha * rounding * spread * merge * class`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundFactors {
    #[serde(with = "rational::serde_rational")]
    pub alpha: Rational,
    #[serde(with = "rational::serde_rational")]
    pub rounding: Rational,
    #[serde(with = "rational::serde_rational")]
    pub spread: Rational,
    #[serde(with = "rational::serde_rational")]
    pub merge: Rational,
    /// Minimum over classes of integer factor times auction factor.
    #[serde(with = "rational::serde_rational")]
    pub class: Rational,
}

impl BoundFactors {
    pub fn product(&self) -> Rational {
        &self.alpha * &self.rounding * &self.spread * &self.merge * &self.class
    }

    /// `c` with `product = alpha (1 - c eps)`.
    pub fn constant(&self, eps: &Rational) -> Rational {
        if self.alpha.is_zero() {
            return Rational::zero();
        }
        (Rational::one() - self.product() / &self.alpha) / eps
    }
}

/// Original-oracle independence calls per stage.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StageCalls {
    pub loop_filter: u64,
    pub solver: u64,
    pub extraction: u64,
    pub merge: u64,
    /// Verification of intermediate and final outputs; not part of the algorithm.
    pub checks: u64,
    /// Rank calls used to bound class solution sizes.
    pub class_rank_calls: u64,
    pub unfolded: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub output: ElementSet,
    #[serde(with = "rational::serde_rational")]
    pub weight: Rational,
    pub weight_f64: f64,
    #[serde(with = "rational::serde_rational")]
    pub epsilon: Rational,
    pub solver: String,
    pub factors: BoundFactors,
    /// Certified lower bound on `weight / OPT`.
    #[serde(with = "rational::serde_rational")]
    pub composed_bound: Rational,
    pub composed_bound_f64: f64,
    #[serde(with = "rational::serde_rational")]
    pub composed_constant: Rational,
    pub chosen_index: Option<u64>,
    pub loops: ElementSet,
    pub indices: Vec<IndexReport>,
    pub stages: StageCalls,
    pub ledger: LedgerSnapshot,
}

impl PipelineReport {
    /// `solver <= sum_c W_c * unfolded_c` and the stage counts add up to the ledger total.
    pub fn metering_holds(&self) -> bool {
        let fresh = || {
            self.indices
                .iter()
                .flat_map(|ix| &ix.classes)
                .filter(|c| !c.reused)
        };
        let per_class = fresh().all(|c| c.solver_calls <= c.max_integer_weight * c.unfolded_calls);
        let bound: u64 = fresh()
            .map(|c| c.max_integer_weight * c.unfolded_calls + c.extraction_calls)
            .sum::<u64>()
            + self.stages.loop_filter
            + self.stages.merge;
        let staged = self.stages.loop_filter
            + self.stages.solver
            + self.stages.extraction
            + self.stages.merge;
        per_class
            && staged + self.stages.checks == self.ledger.independence_calls
            && staged <= bound
    }
}

pub fn weighted_mi_reduce(
    inst: &WeightedInstance,
    eps: &Rational,
    solver: &dyn UnweightedSolver,
) -> Result<PipelineReport> {
    weighted_mi_reduce_with(inst, solver, &PipelineConfig::new(eps.clone()))
}

struct ClassOutcome {
    report: ClassReport,
    factor: Rational,
}

pub fn weighted_mi_reduce_with(
    inst: &WeightedInstance,
    solver: &dyn UnweightedSolver,
    cfg: &PipelineConfig,
) -> Result<PipelineReport> {
    let eps = &cfg.epsilon;
    rational::check_epsilon(eps)?;
    let alpha = solver.alpha();
    let (l1, l2) = (inst.m1.ledger().clone(), inst.m2.ledger().clone());
    let start = combined(&l1, &l2);
    let mut stages = StageCalls::default();

    let loops = inst.loops()?;
    let work = inst.restrict(&inst.support.difference(&loops))?;
    stages.loop_filter = calls(&l1, &l2) - start.independence_calls;

    let rounded = rescale_round(&work, eps)?;
    let wr: Vec<Rational> = rounded
        .instance
        .weights
        .iter()
        .map(|&w| Rational::from_integer(w.into()))
        .collect();
    let rounded_inst = WeightedInstance {
        weights: wr.clone(),
        ..work.clone()
    };
    let spread = spread_decompose(&rounded_inst, eps)?;

    let mut memo: HashMap<ElementSet, usize> = HashMap::new();
    let mut outcomes: Vec<ClassOutcome> = Vec::new();
    let mut indices = Vec::with_capacity(spread.indices.len());
    for index in &spread.indices {
        let mut classes = Vec::with_capacity(index.classes.len());
        for class in &index.classes {
            let report = match memo.get(&class.members) {
                Some(&k) => {
                    let mut r = outcomes[k].report.clone();
                    r.reused = true;
                    r
                }
                None => {
                    let outcome = solve_class(
                        &work,
                        &wr,
                        &class.members,
                        solver,
                        cfg,
                        &l1,
                        &l2,
                        &mut stages,
                    )?;
                    memo.insert(class.members.clone(), outcomes.len());
                    let r = outcome.report.clone();
                    outcomes.push(outcome);
                    r
                }
            };
            classes.push(ClassReport {
                i: index.i,
                l: class.l,
                lower: class.lower.clone(),
                upper: class.upper.clone(),
                ..report
            });
        }

        let merge_input: Vec<MergeClass> = classes
            .iter()
            .rev()
            .map(|c| MergeClass {
                lower: c.lower.clone(),
                upper: c.upper.clone(),
                set: c.extracted.clone(),
            })
            .collect();
        let before = calls(&l1, &l2);
        let merged = greedy_merge(&merge_input, &*work.m1, &*work.m2, &wr)?;
        let merge_calls = calls(&l1, &l2) - before;
        stages.merge += merge_calls;
        indices.push(IndexReport {
            i: index.i,
            rounded_weight: total_weight(&merged, &wr),
            merged,
            merge_calls,
            classes,
        });
    }

    let best = indices
        .iter()
        .fold(None::<&IndexReport>, |best, ix| match best {
            Some(b) if b.rounded_weight >= ix.rounded_weight => Some(b),
            _ => Some(ix),
        });
    let output = best.map(|b| b.merged.clone()).unwrap_or_default();
    let before = calls(&l1, &l2);
    if !inst.is_common_independent(&output)? {
        return Err(Error::ContractViolation(
            "pipeline output is not common independent".into(),
        ));
    }
    stages.checks += calls(&l1, &l2) - before;

    let base = Rational::one() + eps;
    let class = outcomes
        .iter()
        .map(|o| o.factor.clone())
        .min()
        .unwrap_or_else(Rational::one);
    let factors = BoundFactors {
        alpha,
        rounding: (&base * &base).recip(),
        spread: Rational::one() - eps,
        merge: merge_factor(eps),
        class,
    };
    let composed_bound = factors.product();
    let weight = inst.weight_of(&output);
    Ok(PipelineReport {
        weight_f64: rational::to_f64(&weight),
        weight,
        output,
        epsilon: eps.clone(),
        solver: solver.name(),
        composed_bound_f64: rational::to_f64(&composed_bound),
        composed_constant: factors.constant(eps),
        composed_bound,
        factors,
        chosen_index: best.map(|b| b.i),
        loops,
        indices,
        stages,
        ledger: combined(&l1, &l2).since(&start),
    })
}

#[allow(clippy::too_many_arguments)]
fn solve_class(
    work: &WeightedInstance,
    wr: &[Rational],
    members: &ElementSet,
    solver: &dyn UnweightedSolver,
    cfg: &PipelineConfig,
    l1: &Arc<ResourceLedger>,
    l2: &Arc<ResourceLedger>,
    stages: &mut StageCalls,
) -> Result<ClassOutcome> {
    let eps = &cfg.epsilon;
    let lo =
        rational::min_of(members.iter().map(|e| &wr[e.index()])).expect("classes are non-empty");
    let hi =
        rational::max_of(members.iter().map(|e| &wr[e.index()])).expect("classes are non-empty");
    let rank_before = combined(l1, l2).rank_calls;
    let rank_bound = work.m1.rank(members)?.min(work.m2.rank(members)?);
    stages.class_rank_calls += combined(l1, l2).rank_calls - rank_before;

    let unit = class_unit(&lo, &hi, eps, cfg.class_weight_cap);
    let scale = integerize(members, wr, &unit)?;
    let m1: Oracle = restrict(work.m1.clone(), &scale.kept)?;
    let m2: Oracle = restrict(work.m2.clone(), &scale.kept)?;
    let int_inst = IntegerWeightedInstance::new(
        m1.clone(),
        m2.clone(),
        scale.weights.clone(),
        scale.kept.clone(),
    )?;
    let budget = cfg
        .copy_budget
        .unwrap_or(DEFAULT_COPIES_PER_ELEMENT * scale.kept.len().max(1));
    let u = unfold_with_budget(&int_inst, budget)?;

    let before = calls(l1, l2);
    let unfolded_before = u.ledger.independence_calls();
    let s = solver.solve(&*u.m1, &*u.m2)?;
    let unfolded_calls = u.ledger.independence_calls() - unfolded_before;
    let solver_calls = calls(l1, l2) - before;
    stages.solver += solver_calls;
    stages.unfolded += unfolded_calls;
    let before = calls(l1, l2);
    if !is_common_independent(&*u.m1, &*u.m2, &s)? {
        return Err(Error::ContractViolation(format!(
            "solver {} returned a dependent set",
            solver.name()
        )));
    }
    stages.checks += calls(l1, l2) - before;
    let refolded = u.refold(&s)?;

    let int_weights: Vec<Rational> = scale
        .weights
        .iter()
        .map(|&w| Rational::from_integer(w.into()))
        .collect();
    let refolded_inst = WeightedInstance::new(m1, m2, int_weights)?.restrict(&refolded)?;
    let before = calls(l1, l2);
    let extracted = extract(
        &refolded_inst,
        scale.max_weight,
        eps,
        cfg.extraction,
        cfg.check_auction_invariants,
    )?;
    stages.extraction += calls(l1, l2) - before;

    let integer = integer_factor(&unit, &lo, &hi, rank_bound);
    let auction = match cfg.extraction {
        Extraction::Auction => auction_factor(eps, scale.max_weight),
        Extraction::Exhaustive => Rational::one(),
    };
    let factor = &integer * &auction;
    Ok(ClassOutcome {
        report: ClassReport {
            i: 0,
            l: 0,
            lower: Rational::zero(),
            upper: Rational::zero(),
            members: members.clone(),
            unit,
            max_integer_weight: scale.max_weight,
            copies: u.copy_count(),
            unweighted_size: s.len(),
            refolded,
            extracted: extracted.set,
            integer_factor: integer,
            auction_factor: auction,
            unfolded_calls,
            solver_calls,
            extraction_calls: extracted.independence_calls,
            auction_iterations: extracted.iterations,
            reused: false,
        },
        factor,
    })
}

fn calls(l1: &Arc<ResourceLedger>, l2: &Arc<ResourceLedger>) -> u64 {
    independence_calls(l1, l2)
}

fn combined(l1: &Arc<ResourceLedger>, l2: &Arc<ResourceLedger>) -> LedgerSnapshot {
    let a = l1.snapshot();
    if Arc::ptr_eq(l1, l2) {
        return a;
    }
    let b = l2.snapshot();
    LedgerSnapshot {
        independence_calls: a.independence_calls + b.independence_calls,
        rank_calls: a.rank_calls + b.rank_calls,
        stored_elements_peak: a.stored_elements_peak.max(b.stored_elements_peak),
        passes: a.passes.max(b.passes),
        message_elements: a.message_elements + b.message_elements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures;
    use crate::rational::{int, ratio};
    use crate::solvers::{ExactSolver, GreedySolver};

    #[test]
    fn e1_exact_reaches_optimum() {
        let inst = fixtures::e1().build().unwrap();
        let r = weighted_mi_reduce(&inst, &ratio(1, 10), &ExactSolver).unwrap();
        assert_eq!(r.weight, int(4));
        assert_eq!(r.output, ElementSet::from_ids([0, 2]));
        assert!(r.composed_bound > Rational::zero() && r.composed_bound <= Rational::one());
        assert!(r.metering_holds(), "{:?}", r.stages);
    }

    #[test]
    fn e1_greedy_clears_half_bound() {
        let inst = fixtures::e1().build().unwrap();
        let r = weighted_mi_reduce(&inst, &ratio(1, 10), &GreedySolver::default()).unwrap();
        assert!(r.composed_bound <= ratio(1, 2));
        assert!(r.weight >= &r.composed_bound * int(4));
        assert!(inst.is_common_independent(&r.output).unwrap());
    }

    #[test]
    fn single_element_any_solver() {
        let inst = fixtures::single(ratio(7, 3)).build().unwrap();
        for solver in [
            &ExactSolver as &dyn UnweightedSolver,
            &GreedySolver::default(),
        ] {
            let r = weighted_mi_reduce(&inst, &ratio(1, 4), solver).unwrap();
            assert_eq!(r.output, ElementSet::from_ids([0]));
        }
    }

    #[test]
    fn empty_and_figure1() {
        let r = weighted_mi_reduce(
            &fixtures::empty().build().unwrap(),
            &ratio(1, 10),
            &ExactSolver,
        )
        .unwrap();
        assert_eq!((r.weight, r.chosen_index), (int(0), Some(1)));
        let inst = fixtures::figure1().build().unwrap();
        let r = weighted_mi_reduce(&inst, &ratio(1, 10), &ExactSolver).unwrap();
        assert!(r.weight >= &r.composed_bound * int(4));
    }

    #[test]
    fn exhaustive_extraction_drops_auction_factor() {
        let inst = fixtures::e1().build().unwrap();
        let cfg = PipelineConfig {
            extraction: Extraction::Exhaustive,
            ..PipelineConfig::new(ratio(1, 10))
        };
        let r = weighted_mi_reduce_with(&inst, &ExactSolver, &cfg).unwrap();
        assert_eq!(r.weight, int(4));
        assert!(r
            .indices
            .iter()
            .flat_map(|i| &i.classes)
            .all(|c| c.auction_factor == Rational::one()));
    }

    #[test]
    fn integer_factor_examples() {
        // Unit 1/2 on weights in [1, 2], rank 3: loss min(1, 3/2) / 2.
        assert_eq!(
            integer_factor(&ratio(1, 2), &int(1), &int(2), 3),
            ratio(1, 2)
        );
        assert_eq!(class_unit(&int(1), &int(2), &ratio(1, 10), 12), ratio(1, 6));
        assert_eq!(auction_factor(&ratio(1, 10), 3), ratio(9, 10));
    }
}
