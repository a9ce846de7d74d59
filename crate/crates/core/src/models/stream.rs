//! Multi-pass streaming simulation with space metering.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::WeightedInstance;
use crate::ledger::LedgerSnapshot;
use crate::matroid::{restrict, Oracle};
use crate::models::classes::{
    class_weight, finish, is_usable, ClassGrid, ClassKey, ClassOutcome, ClassStats, FinishConfig,
    ModelBound, UnfoldedPair,
};
use crate::order::OrderSpec;
use crate::rational::{self, Rational};
use crate::reduction::unfold::DEFAULT_COPIES_PER_ELEMENT;
use crate::set::{ElementId, ElementSet};
use crate::solvers::exact_mi;
use crate::solvers::pipeline::{Extraction, DEFAULT_CLASS_WEIGHT_CAP};

/// Weighted streaming algorithm. Elements arrive one at a time, once per pass.
pub trait StreamingAlgorithm {
    fn name(&self) -> String;
    fn passes(&self) -> u32;
    fn on_element(&mut self, e: ElementId, w: &Rational) -> Result<()>;
    fn on_pass_end(&mut self) -> Result<()>;
    fn finalize(&mut self) -> Result<ElementSet>;
    /// Elements (or copies) retained right now.
    fn stored(&self) -> u64;
    fn summary(&self) -> StreamSummary {
        StreamSummary::default()
    }
}

/// Wrapper-specific facts available after `finalize`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StreamSummary {
    pub bound: Option<ModelBound>,
    pub classes: usize,
    /// Largest retained count of any single class instance.
    pub class_peak_max: u64,
    pub chosen_index: Option<u64>,
}

/// Cardinality streaming algorithm over unfolded copies. Oracles are lent per call since
/// copies of one class live in that class's unfolding.
pub trait UnweightedStreaming {
    fn name(&self) -> String;
    fn alpha(&self) -> Rational;
    fn passes(&self) -> u32;
    fn on_element(&mut self, c: ElementId, m1: &Oracle, m2: &Oracle) -> Result<()>;
    fn on_pass_end(&mut self) -> Result<()> {
        Ok(())
    }
    fn finalize(&mut self, m1: &Oracle, m2: &Oracle) -> Result<ElementSet>;
    fn stored(&self) -> u64;
}

pub type StreamingFactory = Box<dyn Fn() -> Box<dyn UnweightedStreaming>>;

/// Keeps an arriving element iff the kept set stays common independent. Repeating the scan
/// over further passes never adds anything but exercises pass accounting.
#[derive(Clone, Debug)]
pub struct StreamingGreedy {
    set: ElementSet,
    passes: u32,
}

impl StreamingGreedy {
    pub fn new() -> Self {
        Self::with_passes(1)
    }

    pub fn with_passes(passes: u32) -> Self {
        StreamingGreedy {
            set: ElementSet::new(),
            passes,
        }
    }
}

impl Default for StreamingGreedy {
    fn default() -> Self {
        Self::new()
    }
}

impl UnweightedStreaming for StreamingGreedy {
    fn name(&self) -> String {
        if self.passes == 1 {
            "greedy".into()
        } else {
            format!("greedy[{} passes]", self.passes)
        }
    }
    fn alpha(&self) -> Rational {
        rational::ratio(1, 2)
    }
    fn passes(&self) -> u32 {
        self.passes
    }
    fn on_element(&mut self, c: ElementId, m1: &Oracle, m2: &Oracle) -> Result<()> {
        if self.set.contains(c) {
            return Ok(());
        }
        let candidate = self.set.with(c);
        if m1.is_independent(&candidate)? && m2.is_independent(&candidate)? {
            self.set = candidate;
        }
        Ok(())
    }
    fn finalize(&mut self, _: &Oracle, _: &Oracle) -> Result<ElementSet> {
        Ok(std::mem::take(&mut self.set))
    }
    fn stored(&self) -> u64 {
        self.set.len() as u64
    }
}

/// Stores the whole stream and solves exactly at the end. Not space-efficient; a reference
/// for differential tests.
#[derive(Clone, Debug, Default)]
pub struct ExactOffline {
    seen: ElementSet,
}

impl UnweightedStreaming for ExactOffline {
    fn name(&self) -> String {
        "exact-offline".into()
    }
    fn alpha(&self) -> Rational {
        rational::int(1)
    }
    fn passes(&self) -> u32 {
        1
    }
    fn on_element(&mut self, c: ElementId, _: &Oracle, _: &Oracle) -> Result<()> {
        self.seen.insert(c);
        Ok(())
    }
    fn finalize(&mut self, m1: &Oracle, m2: &Oracle) -> Result<ElementSet> {
        let seen = std::mem::take(&mut self.seen);
        exact_mi(
            &*restrict(m1.clone(), &seen)?,
            &*restrict(m2.clone(), &seen)?,
        )
    }
    fn stored(&self) -> u64 {
        self.seen.len() as u64
    }
}

#[derive(Clone, Debug)]
pub struct WrapperConfig {
    pub epsilon: Rational,
    /// A-priori weight range; every streamed weight must lie inside it.
    pub range: (Rational, Rational),
    pub class_weight_cap: u64,
    pub copy_budget: Option<usize>,
    pub extraction: Extraction,
    pub check_invariants: bool,
}

impl WrapperConfig {
    pub fn new(epsilon: Rational, range: (Rational, Rational)) -> Self {
        WrapperConfig {
            epsilon,
            range,
            class_weight_cap: DEFAULT_CLASS_WEIGHT_CAP,
            copy_budget: None,
            extraction: Extraction::Auction,
            check_invariants: cfg!(debug_assertions),
        }
    }

    /// Config using the instance's declared range, or its actual range when none is declared.
    pub fn for_instance(epsilon: Rational, inst: &WeightedInstance) -> Self {
        Self::new(epsilon, weight_range(inst))
    }

    fn budget(&self, members: usize) -> usize {
        self.copy_budget
            .unwrap_or(DEFAULT_COPIES_PER_ELEMENT * members.max(1))
    }
}

/// Declared range, falling back to `[min, max]` of the support.
pub fn weight_range(inst: &WeightedInstance) -> (Rational, Rational) {
    inst.weight_range.clone().unwrap_or_else(|| {
        let one = rational::int(1);
        (
            inst.min_weight().unwrap_or_else(|| one.clone()),
            inst.max_weight().unwrap_or(one),
        )
    })
}

struct WrappedClass {
    unit: Rational,
    pair: UnfoldedPair,
    alg: Box<dyn UnweightedStreaming>,
    stats: ClassStats,
    peak: u64,
}

/// Runs one unweighted streaming instance per spread class on unfolded copies.
pub struct StreamingWeightedWrapper {
    factory: StreamingFactory,
    cfg: WrapperConfig,
    grid: ClassGrid,
    m1: Oracle,
    m2: Oracle,
    alpha: Rational,
    passes: u32,
    inner_name: String,
    classes: BTreeMap<ClassKey, WrappedClass>,
    weights: HashMap<ElementId, Rational>,
    first_pass: bool,
    summary: StreamSummary,
}

pub fn streaming_weighted_wrapper(
    factory: StreamingFactory,
    m1: Oracle,
    m2: Oracle,
    cfg: WrapperConfig,
) -> Result<StreamingWeightedWrapper> {
    rational::check_epsilon(&cfg.epsilon)?;
    let probe = factory();
    let grid = ClassGrid::new(
        &cfg.epsilon,
        &cfg.range.0,
        &cfg.range.1,
        cfg.class_weight_cap,
    )?;
    Ok(StreamingWeightedWrapper {
        alpha: probe.alpha(),
        passes: probe.passes(),
        inner_name: probe.name(),
        factory,
        cfg,
        grid,
        m1,
        m2,
        classes: BTreeMap::new(),
        weights: HashMap::new(),
        first_pass: true,
        summary: StreamSummary::default(),
    })
}

fn check_range(w: &Rational, range: &(Rational, Rational), e: ElementId) -> Result<()> {
    if *w < range.0 || *w > range.1 {
        return Err(Error::Input(format!(
            "weight of element {e} lies outside the declared range"
        )));
    }
    Ok(())
}

impl StreamingAlgorithm for StreamingWeightedWrapper {
    fn name(&self) -> String {
        format!("weighted[{}]", self.inner_name)
    }
    fn passes(&self) -> u32 {
        self.passes
    }
    fn on_element(&mut self, e: ElementId, w: &Rational) -> Result<()> {
        check_range(w, &self.cfg.range, e)?;
        if !is_usable(&self.m1, &self.m2, e)? {
            return Ok(());
        }
        for key in self.grid.memberships(w) {
            let class = match self.classes.entry(key) {
                std::collections::btree_map::Entry::Occupied(o) => o.into_mut(),
                std::collections::btree_map::Entry::Vacant(v) => v.insert(WrappedClass {
                    unit: self.grid.unit(key),
                    pair: UnfoldedPair::new(
                        &self.m1,
                        &self.m2,
                        self.cfg.budget(self.m1.ground_size()),
                    ),
                    alg: (self.factory)(),
                    stats: ClassStats::default(),
                    peak: 0,
                }),
            };
            if self.first_pass {
                class.stats.observe(w);
            }
            let wc = class_weight(w, &class.unit)?;
            if wc == 0 {
                continue;
            }
            for c in class.pair.copies(e, wc)? {
                class.alg.on_element(c, &class.pair.m1, &class.pair.m2)?;
            }
            class.peak = class.peak.max(class.alg.stored());
        }
        if self.first_pass {
            self.weights.insert(e, w.clone());
        }
        Ok(())
    }
    fn on_pass_end(&mut self) -> Result<()> {
        self.first_pass = false;
        for class in self.classes.values_mut() {
            class.alg.on_pass_end()?;
        }
        Ok(())
    }
    fn finalize(&mut self) -> Result<ElementSet> {
        let classes = std::mem::take(&mut self.classes);
        let class_peak_max = classes.values().map(|c| c.peak).max().unwrap_or(0);
        let mut outcomes = Vec::with_capacity(classes.len());
        for (key, mut c) in classes {
            let solution = c.alg.finalize(&c.pair.m1, &c.pair.m2)?;
            outcomes.push(ClassOutcome {
                key,
                unit: c.unit,
                stats: c.stats,
                pair: c.pair,
                solution,
            });
        }
        let done = finish_outcomes(
            outcomes,
            &self.grid,
            &self.cfg,
            &self.m1,
            &self.m2,
            &self.weights,
            self.alpha.clone(),
        )?;
        self.summary = StreamSummary {
            class_peak_max,
            ..done.1
        };
        Ok(done.0)
    }
    fn stored(&self) -> u64 {
        self.classes.values().map(|c| c.alg.stored()).sum()
    }
    fn summary(&self) -> StreamSummary {
        self.summary.clone()
    }
}

fn finish_outcomes(
    outcomes: Vec<ClassOutcome>,
    grid: &ClassGrid,
    cfg: &WrapperConfig,
    m1: &Oracle,
    m2: &Oracle,
    weights: &HashMap<ElementId, Rational>,
    alpha: Rational,
) -> Result<(ElementSet, StreamSummary)> {
    let size = m1.ground_size();
    let mut dense = vec![Rational::zero(); size];
    for (e, w) in weights {
        dense[e.index()] = w.clone();
    }
    let done = finish(
        outcomes,
        grid,
        &FinishConfig {
            m1,
            m2,
            weights: &dense,
            alpha,
            epsilon: &cfg.epsilon,
            extraction: cfg.extraction,
            check_invariants: cfg.check_invariants,
        },
    )?;
    Ok((
        done.set,
        StreamSummary {
            bound: Some(done.bound),
            classes: done.classes,
            class_peak_max: 0,
            chosen_index: done.chosen_index,
        },
    ))
}

struct GreedyClass {
    unit: Rational,
    pair: UnfoldedPair,
    set: ElementSet,
    stats: ClassStats,
    peak: u64,
}

/// One-pass weighted greedy: per class, copies of each arriving element are kept greedily.
pub struct OnePassGreedyWeighted {
    cfg: WrapperConfig,
    grid: ClassGrid,
    m1: Oracle,
    m2: Oracle,
    classes: BTreeMap<ClassKey, GreedyClass>,
    weights: HashMap<ElementId, Rational>,
    summary: StreamSummary,
}

pub fn one_pass_greedy_weighted(
    m1: Oracle,
    m2: Oracle,
    cfg: WrapperConfig,
) -> Result<OnePassGreedyWeighted> {
    rational::check_epsilon(&cfg.epsilon)?;
    let grid = ClassGrid::new(
        &cfg.epsilon,
        &cfg.range.0,
        &cfg.range.1,
        cfg.class_weight_cap,
    )?;
    Ok(OnePassGreedyWeighted {
        cfg,
        grid,
        m1,
        m2,
        classes: BTreeMap::new(),
        weights: HashMap::new(),
        summary: StreamSummary::default(),
    })
}

impl StreamingAlgorithm for OnePassGreedyWeighted {
    fn name(&self) -> String {
        "one-pass-greedy".into()
    }
    fn passes(&self) -> u32 {
        1
    }
    fn on_element(&mut self, e: ElementId, w: &Rational) -> Result<()> {
        check_range(w, &self.cfg.range, e)?;
        if !is_usable(&self.m1, &self.m2, e)? {
            return Ok(());
        }
        for key in self.grid.memberships(w) {
            let unit = self.grid.unit(key);
            let budget = self.cfg.budget(self.m1.ground_size());
            let class = self.classes.entry(key).or_insert_with(|| GreedyClass {
                pair: UnfoldedPair::new(&self.m1, &self.m2, budget),
                unit,
                set: ElementSet::new(),
                stats: ClassStats::default(),
                peak: 0,
            });
            class.stats.observe(w);
            let wc = class_weight(w, &class.unit)?;
            if wc == 0 {
                continue;
            }
            for c in class.pair.copies(e, wc)? {
                let candidate = class.set.with(c);
                if class.pair.m1.is_independent(&candidate)?
                    && class.pair.m2.is_independent(&candidate)?
                {
                    class.set = candidate;
                }
            }
            class.peak = class.peak.max(class.set.len() as u64);
        }
        self.weights.insert(e, w.clone());
        Ok(())
    }
    fn on_pass_end(&mut self) -> Result<()> {
        Ok(())
    }
    fn finalize(&mut self) -> Result<ElementSet> {
        let classes = std::mem::take(&mut self.classes);
        let class_peak_max = classes.values().map(|c| c.peak).max().unwrap_or(0);
        let outcomes = classes
            .into_iter()
            .map(|(key, c)| ClassOutcome {
                key,
                unit: c.unit,
                stats: c.stats,
                pair: c.pair,
                solution: c.set,
            })
            .collect();
        let done = finish_outcomes(
            outcomes,
            &self.grid,
            &self.cfg,
            &self.m1,
            &self.m2,
            &self.weights,
            rational::ratio(1, 2),
        )?;
        self.summary = StreamSummary {
            class_peak_max,
            ..done.1
        };
        Ok(done.0)
    }
    fn stored(&self) -> u64 {
        self.classes.values().map(|c| c.set.len() as u64).sum()
    }
    fn summary(&self) -> StreamSummary {
        self.summary.clone()
    }
}

/// Outcome of a streaming or protocol run.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub model: String,
    pub algorithm: String,
    pub output: ElementSet,
    #[serde(with = "rational::serde_rational")]
    pub weight: Rational,
    pub weight_f64: f64,
    pub passes: u32,
    pub stored_elements_peak: u64,
    pub message_elements: u64,
    /// Arrivals after which the retained count exceeded the configured cap.
    pub space_violations: u64,
    pub protocol_violations: u64,
    pub classes: usize,
    pub class_peak_max: u64,
    pub chosen_index: Option<u64>,
    pub bound: Option<ModelBound>,
    /// Whether class boundaries came from a declared range rather than the instance itself.
    pub range_declared: bool,
    pub ledger: LedgerSnapshot,
}

impl RunReport {
    /// Peak retained count is at most `classes * class_peak_max` (no merge buffer is kept
    /// while streaming).
    pub fn space_accounting_holds(&self) -> bool {
        self.classes == 0 || self.stored_elements_peak <= self.classes as u64 * self.class_peak_max
    }
}

#[derive(Clone, Debug, Default)]
pub struct StreamOptions {
    pub order: OrderSpec,
    /// Defaults to the algorithm's own pass count.
    pub passes: Option<u32>,
    pub space_cap: Option<u64>,
}

/// Delivers the support in `order`, once per pass, and meters the retained count after
/// every arrival.
pub fn run_stream(
    alg: &mut dyn StreamingAlgorithm,
    inst: &WeightedInstance,
    opts: &StreamOptions,
) -> Result<RunReport> {
    let passes = opts.passes.unwrap_or_else(|| alg.passes());
    if passes == 0 {
        return Err(Error::Input("a stream needs at least one pass".into()));
    }
    let ledger = inst.m1.ledger().clone();
    let start = ledger.snapshot();
    let order = opts.order.apply(&inst.support.iter().collect::<Vec<_>>());
    let mut peak = 0;
    let mut violations = 0;
    for _ in 0..passes {
        for &e in &order {
            alg.on_element(e, inst.weight(e))?;
            let stored = alg.stored();
            peak = peak.max(stored);
            ledger.observe_stored(stored);
            if opts.space_cap.is_some_and(|cap| stored > cap) {
                violations += 1;
            }
        }
        alg.on_pass_end()?;
        ledger.record_pass();
    }
    let output = alg.finalize()?;
    if !inst.is_common_independent(&output)? {
        return Err(Error::ContractViolation(format!(
            "{} returned a set that is not common independent",
            alg.name()
        )));
    }
    let summary = alg.summary();
    let weight = inst.weight_of(&output);
    Ok(RunReport {
        model: "stream".into(),
        algorithm: alg.name(),
        weight_f64: rational::to_f64(&weight),
        weight,
        output,
        passes,
        stored_elements_peak: peak,
        message_elements: 0,
        space_violations: violations,
        protocol_violations: 0,
        classes: summary.classes,
        class_peak_max: summary.class_peak_max,
        chosen_index: summary.chosen_index,
        bound: summary.bound,
        range_declared: inst.weight_range.is_some(),
        ledger: ledger.snapshot().since(&start),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures;
    use crate::rational::{int, ratio};
    use crate::reduction::brute_force_opt;

    fn greedy_factory() -> StreamingFactory {
        Box::new(|| Box::new(StreamingGreedy::new()))
    }

    #[test]
    fn one_pass_greedy_on_e1() {
        let inst = fixtures::e1().build().unwrap();
        let mut alg = one_pass_greedy_weighted(
            inst.m1.clone(),
            inst.m2.clone(),
            WrapperConfig::for_instance(ratio(1, 10), &inst),
        )
        .unwrap();
        let r = run_stream(&mut alg, &inst, &StreamOptions::default()).unwrap();
        assert!(r.weight >= ratio(16, 10));
        assert_eq!(r.passes, 1);
        assert!(r.space_accounting_holds());
        assert!(!r.range_declared);
    }

    #[test]
    fn wrapper_matches_dedicated_greedy() {
        for spec in [fixtures::e1(), fixtures::figure1()] {
            let inst = spec.build().unwrap();
            let cfg = WrapperConfig::for_instance(ratio(1, 10), &inst);
            for order in [OrderSpec::Natural, OrderSpec::Reverse, OrderSpec::Random(5)] {
                let opts = StreamOptions {
                    order,
                    ..Default::default()
                };
                let mut a = one_pass_greedy_weighted(inst.m1.clone(), inst.m2.clone(), cfg.clone())
                    .unwrap();
                let mut b = streaming_weighted_wrapper(
                    greedy_factory(),
                    inst.m1.clone(),
                    inst.m2.clone(),
                    cfg.clone(),
                )
                .unwrap();
                let ra = run_stream(&mut a, &inst, &opts).unwrap();
                let rb = run_stream(&mut b, &inst, &opts).unwrap();
                assert_eq!(ra.output, rb.output);
                assert_eq!(ra.stored_elements_peak, rb.stored_elements_peak);
            }
        }
    }

    #[test]
    fn empty_stream_and_single_element() {
        let empty = fixtures::empty().build().unwrap();
        let mut alg = one_pass_greedy_weighted(
            empty.m1.clone(),
            empty.m2.clone(),
            WrapperConfig::for_instance(ratio(1, 10), &empty),
        )
        .unwrap();
        assert_eq!(
            run_stream(&mut alg, &empty, &StreamOptions::default())
                .unwrap()
                .output,
            ElementSet::new()
        );
        let single = fixtures::single(int(5)).build().unwrap();
        let mut alg = one_pass_greedy_weighted(
            single.m1.clone(),
            single.m2.clone(),
            WrapperConfig::for_instance(ratio(1, 10), &single),
        )
        .unwrap();
        assert_eq!(
            run_stream(&mut alg, &single, &StreamOptions::default())
                .unwrap()
                .output,
            ElementSet::from_ids([0])
        );
    }

    #[test]
    fn passes_are_preserved() {
        let inst = fixtures::figure1().build().unwrap();
        let factory: StreamingFactory = Box::new(|| Box::new(StreamingGreedy::with_passes(2)));
        let mut w = streaming_weighted_wrapper(
            factory,
            inst.m1.clone(),
            inst.m2.clone(),
            WrapperConfig::for_instance(ratio(1, 4), &inst),
        )
        .unwrap();
        assert_eq!(w.passes(), 2);
        let r = run_stream(&mut w, &inst, &StreamOptions::default()).unwrap();
        assert_eq!((r.passes, r.ledger.passes), (2, 2));
    }

    #[test]
    fn exact_offline_stub_clears_bound() {
        let inst = fixtures::e1().build().unwrap();
        let factory: StreamingFactory = Box::new(|| Box::new(ExactOffline::default()));
        let mut w = streaming_weighted_wrapper(
            factory,
            inst.m1.clone(),
            inst.m2.clone(),
            WrapperConfig::for_instance(ratio(1, 10), &inst),
        )
        .unwrap();
        let r = run_stream(&mut w, &inst, &StreamOptions::default()).unwrap();
        let (opt, _) = brute_force_opt(&inst).unwrap();
        assert!(r.weight >= r.bound.unwrap().product * opt);
    }

    #[test]
    fn space_cap_records_violations_and_zero_passes_rejected() {
        let inst = fixtures::figure1().build().unwrap();
        let mut alg = one_pass_greedy_weighted(
            inst.m1.clone(),
            inst.m2.clone(),
            WrapperConfig::for_instance(ratio(1, 10), &inst),
        )
        .unwrap();
        let r = run_stream(
            &mut alg,
            &inst,
            &StreamOptions {
                space_cap: Some(0),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.space_violations > 0);
        let opts = StreamOptions {
            passes: Some(0),
            ..Default::default()
        };
        assert!(matches!(
            run_stream(&mut alg, &inst, &opts),
            Err(Error::Input(_))
        ));
    }
}
