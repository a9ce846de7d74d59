//! Seeded property suites with counterexample minimization.
//!
//! Each suite draws its own corpus from a seed, checks one family of invariants on every
//! case, and reports violations. Instance-based failures are shrunk by deleting elements
//! while the failure persists.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generate::{corpus, FamilyKind, GeneratorSpec, WeightDist};
use crate::instance::{FamilySpec, InstanceSpec, IntegerWeightedInstance, WeightedInstance};
use crate::ledger::ResourceLedger;
use crate::matroid::{
    check_circuit_elimination, fundamental_circuit, verify_matroid_axioms, CorruptedOracle,
    MatroidKind, MatroidOracle, Oracle,
};
use crate::models::stream::StreamingFactory;
use crate::models::{
    comm_weighted_wrapper, one_pass_greedy_weighted, run_protocol, run_stream,
    streaming_weighted_wrapper, GreedyProtocol, PartitionSpec, StreamOptions, StreamingGreedy,
    WrapperConfig,
};
use crate::order::OrderSpec;
use crate::rational::{self, int, ratio, Rational};
use crate::reduction::merge::total_weight;
use crate::reduction::{
    brute_force_chain_duals, brute_force_max_cardinality, brute_force_opt, chain_objective,
    greedy_merge, merge_factor, rescale_round, unfold, unweighted_dual, MergeClass,
};
use crate::set::{ElementId, ElementSet};
use crate::solvers::{
    run_auction, weighted_mi_reduce, AuctionConfig, ExactSolver, GreedySolver, UnweightedSolver,
};

/// Largest unfolded ground set checked exhaustively: `n <= 6` elements of weight `<= 4`.
pub const UNFOLDED_AXIOM_BUDGET: usize = 24;

/// Fixed constant `C` in the auction's `independence calls <= C n / eps^2` check.
pub const AUCTION_CALL_CONSTANT: u64 = 8;

/// Fixed `c` in the protocol check `ratio >= 1/2 (1 - c eps)`: one `eps` for the spread
/// index, four for the merge.
pub const COMM_CONSTANT: i64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Axioms,
    UnfoldEquivalence,
    Duals,
    Charging,
    Merge,
    Rounding,
    Auction,
    Pipeline,
    Models,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Axioms,
        Suite::UnfoldEquivalence,
        Suite::Duals,
        Suite::Charging,
        Suite::Merge,
        Suite::Rounding,
        Suite::Auction,
        Suite::Pipeline,
        Suite::Models,
    ];

    /// Default case count: the acceptance minimum for the criterion the suite backs.
    pub fn default_cases(self) -> usize {
        match self {
            Suite::Axioms | Suite::UnfoldEquivalence | Suite::Pipeline | Suite::Models => 200,
            Suite::Duals => 50,
            Suite::Charging => 500,
            Suite::Merge | Suite::Auction => 100,
            Suite::Rounding => 10_000,
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.to_string() == s)
            .ok_or_else(|| Error::Input(format!("unknown suite {s:?}")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Axioms => "axioms",
            Suite::UnfoldEquivalence => "unfold-equivalence",
            Suite::Duals => "duals",
            Suite::Charging => "charging",
            Suite::Merge => "merge",
            Suite::Rounding => "rounding",
            Suite::Auction => "auction",
            Suite::Pipeline => "pipeline",
            Suite::Models => "models",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    /// Cases per parameter setting (per `eps` where the suite sweeps several).
    pub cases: usize,
    pub seed: u64,
    /// Adds the corrupted-oracle negative control to the axiom suite.
    pub corrupt: bool,
}

impl SuiteConfig {
    pub fn new(suite: Suite) -> Self {
        SuiteConfig {
            cases: suite.default_cases(),
            seed: 1,
            corrupt: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub case: String,
    pub message: String,
    /// Minimized instance, when the case is instance-based.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSpec>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: u64,
    pub violations: u64,
    pub metrics: BTreeMap<String, f64>,
    /// First few failures; `violations` counts all of them.
    pub counterexamples: Vec<Counterexample>,
}

const KEPT_COUNTEREXAMPLES: usize = 5;

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport {
            suite,
            cases: 0,
            violations: 0,
            metrics: BTreeMap::new(),
            counterexamples: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.cases > 0
    }

    fn fail(&mut self, case: String, message: String, instance: Option<InstanceSpec>) {
        self.violations += 1;
        if self.counterexamples.len() < KEPT_COUNTEREXAMPLES {
            self.counterexamples.push(Counterexample {
                case,
                message,
                instance,
            });
        }
    }

    fn max(&mut self, key: &str, v: f64) {
        let slot = self.metrics.entry(key.into()).or_insert(f64::NEG_INFINITY);
        *slot = slot.max(v);
    }

    fn min(&mut self, key: &str, v: f64) {
        let slot = self.metrics.entry(key.into()).or_insert(f64::INFINITY);
        *slot = slot.min(v);
    }

    fn add(&mut self, key: &str, v: f64) {
        *self.metrics.entry(key.into()).or_insert(0.0) += v;
    }

    /// Runs `check` on `spec`; on failure records the minimized instance.
    fn check_instance<F>(&mut self, case: String, spec: &InstanceSpec, check: F)
    where
        F: Fn(&InstanceSpec, &mut SuiteReport) -> Result<Option<String>>,
    {
        self.cases += 1;
        if let Some(message) = failure(spec, &mut *self, &check) {
            let quiet = |s: &InstanceSpec| failure(s, &mut SuiteReport::new(self.suite), &check);
            let (small, message) = minimize(spec.clone(), message, quiet);
            self.fail(case, message, Some(small));
        }
    }
}

fn failure<F>(spec: &InstanceSpec, report: &mut SuiteReport, check: &F) -> Option<String>
where
    F: Fn(&InstanceSpec, &mut SuiteReport) -> Result<Option<String>>,
{
    match check(spec, report) {
        Ok(v) => v,
        Err(e) => Some(e.to_string()),
    }
}

/// Greedy element removal while the failure persists.
pub fn minimize(
    mut spec: InstanceSpec,
    mut message: String,
    fails: impl Fn(&InstanceSpec) -> Option<String>,
) -> (InstanceSpec, String) {
    'outer: loop {
        for e in 0..spec.n {
            let smaller = spec.without_element(e);
            if let Some(m) = fails(&smaller) {
                spec = smaller;
                message = m;
                continue 'outer;
            }
        }
        return (spec, message);
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(suite);
    match suite {
        Suite::Axioms => axioms(cfg, &mut report)?,
        Suite::UnfoldEquivalence => unfold_equivalence(cfg, &mut report),
        Suite::Duals => duals(cfg, &mut report),
        Suite::Charging => charging(cfg, &mut report)?,
        Suite::Merge => merge(cfg, &mut report),
        Suite::Rounding => rounding(cfg, &mut report)?,
        Suite::Auction => auction(cfg, &mut report),
        Suite::Pipeline => pipeline(cfg, &mut report),
        Suite::Models => models(cfg, &mut report),
    }
    Ok(report)
}

/// Integer-weighted corpus over all 16 family pairings with `n <= max_n`, `W <= max_w`.
pub fn integer_corpus(count: usize, max_n: usize, max_w: u64, seed: u64) -> Vec<GeneratorSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| GeneratorSpec {
            family1: FamilyKind::ALL[k % 4],
            family2: FamilyKind::ALL[(k / 4) % 4],
            n: rng.gen_range(1..=max_n),
            seed: rng.gen(),
            weights: WeightDist::UniformInt {
                max: rng.gen_range(1..=max_w),
            },
        })
        .collect()
}

/// Corpus of criterion-1 shape: `n <= 6`, `W <= 4`.
pub fn unfold_corpus(cases: usize, seed: u64) -> Vec<GeneratorSpec> {
    integer_corpus(cases, 6, 4, seed)
}

/// Wraps an unfolded oracle and records the most original calls any single query cost.
struct CostProbe {
    inner: Oracle,
    base: Arc<ResourceLedger>,
    worst_independence: AtomicU64,
    worst_rank: AtomicU64,
}

impl CostProbe {
    fn new(inner: Oracle, base: Arc<ResourceLedger>) -> Self {
        CostProbe {
            inner,
            base,
            worst_independence: AtomicU64::new(0),
            worst_rank: AtomicU64::new(0),
        }
    }

    fn worst(&self) -> u64 {
        self.worst_independence
            .load(Ordering::Relaxed)
            .max(self.worst_rank.load(Ordering::Relaxed))
    }
}

impl MatroidOracle for CostProbe {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }
    fn kind(&self) -> MatroidKind {
        self.inner.kind()
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        self.inner.ledger()
    }
    fn domain(&self) -> ElementSet {
        self.inner.domain()
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        let before = self.base.independence_calls();
        let r = self.inner.is_independent(set);
        self.worst_independence
            .fetch_max(self.base.independence_calls() - before, Ordering::Relaxed);
        r
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        let before = self.base.rank_calls();
        let r = self.inner.rank(set);
        self.worst_rank
            .fetch_max(self.base.rank_calls() - before, Ordering::Relaxed);
        r
    }
}

fn probes(inst: &WeightedInstance) -> Result<(IntegerWeightedInstance, CostProbe, CostProbe)> {
    let iw = IntegerWeightedInstance::from_weighted(inst)?;
    let u = unfold(&iw)?;
    let base = inst.m1.ledger().clone();
    let p1 = CostProbe::new(u.m1.clone(), base.clone());
    let p2 = CostProbe::new(u.m2.clone(), base);
    Ok((iw, p1, p2))
}

fn probe_cost_message(p: &CostProbe, w: u64, side: &str) -> Option<String> {
    (p.worst() > w).then(|| {
        format!(
            "an unfolded {side} query cost {} original calls, W = {w}",
            p.worst()
        )
    })
}

fn axioms(cfg: &SuiteConfig, report: &mut SuiteReport) -> Result<()> {
    for (k, g) in unfold_corpus(cfg.cases, cfg.seed).into_iter().enumerate() {
        report.check_instance(format!("axioms #{k}"), &g.generate(), |spec, rep| {
            let inst = spec.build()?;
            for m in [&inst.m1, &inst.m2] {
                let r = verify_matroid_axioms(&**m, UNFOLDED_AXIOM_BUDGET)?;
                if let Some(v) = r.violation {
                    return Ok(Some(format!("original {:?} oracle: {v:?}", m.kind())));
                }
                if let Some((c1, c2, x)) = check_circuit_elimination(&**m, UNFOLDED_AXIOM_BUDGET)? {
                    return Ok(Some(format!(
                        "circuit elimination fails for {c1:?}, {c2:?} at {x}"
                    )));
                }
            }
            let (iw, p1, p2) = probes(&inst)?;
            for (p, side) in [(&p1, "M1"), (&p2, "M2")] {
                let r = verify_matroid_axioms(p, UNFOLDED_AXIOM_BUDGET)?;
                rep.max("max_unfolded_elements", r.elements as f64);
                rep.add("subsets_checked", r.subsets_checked as f64);
                if let Some(v) = r.violation {
                    return Ok(Some(format!("unfolded {side}: {v:?}")));
                }
                rep.max(
                    "max_calls_per_query_over_w",
                    p.worst() as f64 / iw.max_weight as f64,
                );
                if let Some(m) = probe_cost_message(p, iw.max_weight, side) {
                    return Ok(Some(m));
                }
            }
            Ok(None)
        });
    }
    if cfg.corrupt {
        report.cases += 1;
        let bad = CorruptedOracle::new(4, Arc::new(ResourceLedger::new()));
        let r = verify_matroid_axioms(&bad, UNFOLDED_AXIOM_BUDGET)?;
        if let Some(v) = r.violation {
            report.fail(
                "corrupted fixture".into(),
                format!(
                    "witness: {}",
                    serde_json::to_string(&v).expect("serializes")
                ),
                None,
            );
        }
    }
    Ok(())
}

fn unfold_equivalence(cfg: &SuiteConfig, report: &mut SuiteReport) {
    for (k, g) in unfold_corpus(cfg.cases, cfg.seed).into_iter().enumerate() {
        report.check_instance(
            format!("unfold-equivalence #{k}"),
            &g.generate(),
            |spec, rep| {
                let inst = spec.build()?;
                let (opt, opt_set) = brute_force_opt(&inst)?;
                let (iw, p1, p2) = probes(&inst)?;
                let (card, copies) = brute_force_max_cardinality(&p1, &p2, UNFOLDED_AXIOM_BUDGET)?;
                if int(card as i64) != opt {
                    return Ok(Some(format!(
                        "unfolded optimum {card} differs from weighted optimum {}",
                        rational::format(&opt)
                    )));
                }
                let u = unfold(&iw)?;
                let lifted = u.lift(&opt_set);
                if lifted.len() as u64 != iw.weight_of(&opt_set)
                    || !(p1.is_independent(&lifted)? && p2.is_independent(&lifted)?)
                {
                    return Ok(Some(
                        "lifting the weighted optimum does not give a common independent copy set"
                            .into(),
                    ));
                }
                let (refolded_opt, _) = brute_force_opt(&inst.restrict(&u.refold(&copies)?)?)?;
                if refolded_opt < opt {
                    return Ok(Some("the refolded restriction lost weight".into()));
                }
                for (p, side) in [(&p1, "M1"), (&p2, "M2")] {
                    rep.max(
                        "max_calls_per_query_over_w",
                        p.worst() as f64 / iw.max_weight as f64,
                    );
                    if let Some(m) = probe_cost_message(p, iw.max_weight, side) {
                        return Ok(Some(m));
                    }
                }
                rep.max("max_copies", u.copy_count() as f64);
                Ok(None)
            },
        );
    }
}

fn duals(cfg: &SuiteConfig, report: &mut SuiteReport) {
    for (k, g) in integer_corpus(cfg.cases, 4, 4, cfg.seed)
        .into_iter()
        .enumerate()
    {
        report.check_instance(format!("duals #{k}"), &g.generate(), |spec, rep| {
            let inst = spec.build()?;
            let iw = IntegerWeightedInstance::from_weighted(&inst)?;
            let (yp, zp, g_value) = brute_force_chain_duals(&iw)?;
            let u = unfold(&iw)?;
            let d = unweighted_dual(&yp, &zp, &u)?;
            if let Some(e) = d.uncovered(&u.m1.domain()) {
                return Ok(Some(format!("copy {e} is not covered by the lifted dual")));
            }
            let f = d.objective(&*u.m1, &*u.m2)?;
            let g_check = chain_objective(&yp, &zp, &*iw.m1, &*iw.m2)?;
            let (card, _) = brute_force_max_cardinality(&*u.m1, &*u.m2, UNFOLDED_AXIOM_BUDGET)?;
            if f != g_value || g_check != g_value || f != card as u64 {
                return Ok(Some(format!(
                    "f = {f}, g = {g_value} (recomputed {g_check}), unfolded optimum = {card}"
                )));
            }
            rep.add("dual_sets", (d.y.len() + d.z.len()) as f64);
            Ok(None)
        });
    }
}

/// Random independent set inside `pool`, scanning in random order and keeping each
/// addable element with probability `keep`.
fn random_independent(
    m: &dyn MatroidOracle,
    pool: &[ElementId],
    keep: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ElementSet> {
    let mut order = pool.to_vec();
    order.shuffle(rng);
    let mut s = ElementSet::new();
    for e in order {
        if rng.gen_bool(keep) && m.is_independent(&s.with(e))? {
            s.insert(e);
        }
    }
    Ok(s)
}

/// One charging configuration: levels `S'_t`, a chosen level `j`, and an independent
/// `I' ⊆ ∪_{t>=j} S'_t`. Returns `(l, |(∪ C_t) ∩ (I' - S'_j)|)`.
fn charging_case(m: &dyn MatroidOracle, rng: &mut ChaCha8Rng) -> Result<(usize, usize)> {
    let n = m.ground_size();
    let levels = rng.gen_range(2..=3usize);
    let mut by_level: Vec<Vec<ElementId>> = vec![Vec::new(); levels];
    for e in 0..n as u32 {
        by_level[rng.gen_range(0..levels)].push(ElementId(e));
    }
    let s: Vec<ElementSet> = by_level
        .iter()
        .map(|pool| random_independent(m, pool, 1.0, rng))
        .collect::<Result<_>>()?;
    let j = rng.gen_range(0..levels - 1);
    // Higher levels go first so they tend to span part of S'_j.
    let keep = rng.gen_range(0.6..=1.0);
    let higher: Vec<ElementId> = s[j + 1..].iter().flat_map(|x| x.iter()).collect();
    let mut i_prime = random_independent(m, &higher, keep, rng)?;
    let mut own: Vec<ElementId> = s[j].iter().collect();
    own.shuffle(rng);
    for e in own {
        if rng.gen_bool(keep) && m.is_independent(&i_prime.with(e))? {
            i_prime.insert(e);
        }
    }
    let mut circuits = ElementSet::new();
    let mut l = 0;
    for e in s[j].difference(&i_prime).iter() {
        if !m.is_independent(&i_prime.with(e))? {
            l += 1;
            circuits = circuits.union(&fundamental_circuit(m, &i_prime, e)?);
        }
    }
    Ok((l, circuits.intersection(&i_prime.difference(&s[j])).len()))
}

fn charging(cfg: &SuiteConfig, report: &mut SuiteReport) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for k in 0..cfg.cases {
        let g = GeneratorSpec {
            family1: FamilyKind::ALL[k % 4],
            family2: FamilyKind::Uniform,
            n: rng.gen_range(1..=8),
            seed: rng.gen(),
            weights: WeightDist::UniformInt { max: 1 },
        };
        let inst = g.generate().build()?;
        report.cases += 1;
        match charging_case(&*inst.m1, &mut rng) {
            Ok((l, charged)) => {
                if l > 0 {
                    report.add("non_vacuous", 1.0);
                }
                report.max("max_l", l as f64);
                if charged < l {
                    report.fail(
                        format!("charging #{k}"),
                        format!("{charged} charged elements for l = {l}"),
                        Some(g.generate()),
                    );
                }
            }
            Err(e) => report.fail(format!("charging #{k}"), e.to_string(), Some(g.generate())),
        }
    }
    Ok(())
}

/// Instance whose classes `[b^(2t), b^(2t+1))`, `b = 1/eps`, are `1/eps`-spread.
fn spread_instance(
    g: &GeneratorSpec,
    eps: &Rational,
    rng: &mut ChaCha8Rng,
) -> (InstanceSpec, usize) {
    let mut spec = g.generate();
    let b = eps.recip();
    let classes = rng.gen_range(1..=3usize);
    spec.weights = (0..spec.n)
        .map(|_| {
            let t = rng.gen_range(0..classes);
            let lower = num_traits::pow(b.clone(), 2 * t);
            let u = ratio(rng.gen_range(0..1000), 1000);
            &lower * (Rational::one() + u * (&b - Rational::one()))
        })
        .collect();
    spec.weight_range = None;
    (spec, classes)
}

fn merge_case(
    spec: &InstanceSpec,
    eps: &Rational,
    classes: usize,
    rep: &mut SuiteReport,
) -> Result<Option<String>> {
    let inst = spec.build()?;
    let b = eps.recip();
    let mut parts = Vec::new();
    for t in (0..classes).rev() {
        let lower = num_traits::pow(b.clone(), 2 * t);
        let upper = &lower * &b;
        let members: ElementSet = inst
            .support
            .iter()
            .filter(|e| *inst.weight(*e) >= lower && *inst.weight(*e) < upper)
            .collect();
        let (_, set) = brute_force_opt(&inst.restrict(&members)?)?;
        parts.push(MergeClass { lower, upper, set });
    }
    let merged = greedy_merge(&parts, &*inst.m1, &*inst.m2, &inst.weights)?;
    if !inst.is_common_independent(&merged)? {
        return Ok(Some("merged set is not common independent".into()));
    }
    let sum = parts.iter().fold(Rational::zero(), |acc, c| {
        acc + total_weight(&c.set, &inst.weights)
    });
    let got = inst.weight_of(&merged);
    if got < merge_factor(eps) * &sum {
        return Ok(Some(format!(
            "merged {} < (1-4eps) * {}",
            rational::format(&got),
            rational::format(&sum)
        )));
    }
    if !sum.is_zero() {
        rep.min(
            &format!("min_ratio_eps_{}", rational::format(eps)),
            rational::to_f64(&(got / sum)),
        );
    }
    Ok(None)
}

fn merge(cfg: &SuiteConfig, report: &mut SuiteReport) {
    for eps in [ratio(1, 20), ratio(1, 10), ratio(1, 5)] {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for (k, g) in integer_corpus(cfg.cases, 8, 1, cfg.seed)
            .into_iter()
            .enumerate()
        {
            let (spec, classes) = spread_instance(&g, &eps, &mut rng);
            let name = format!("merge eps={} #{k}", rational::format(&eps));
            report.check_instance(name, &spec, |s, rep| merge_case(s, &eps, classes, rep));
        }
    }
}

fn rounding(cfg: &SuiteConfig, report: &mut SuiteReport) -> Result<()> {
    const BATCH: usize = 100;
    for eps in [ratio(1, 10), ratio(1, 4), ratio(1, 2)] {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let square = (Rational::one() + &eps) * (Rational::one() + &eps);
        let mut left = cfg.cases;
        while left > 0 {
            let n = left.min(BATCH);
            left -= n;
            let weights: Vec<Rational> = (0..n)
                .map(|_| ratio(rng.gen_range(1..=1_000_000), rng.gen_range(1..=1000)))
                .collect();
            let spec = InstanceSpec {
                n,
                matroid1: FamilySpec::Uniform { k: 1 },
                matroid2: FamilySpec::Uniform { k: 1 },
                weights,
                weight_range: None,
            };
            let inst = spec.build()?;
            let r = rescale_round(&inst, &eps)?;
            for e in &inst.support {
                report.cases += 1;
                let ws = &r.scaled[e.index()];
                let wr = int(r.instance.weights[e.index()] as i64);
                if !(wr <= *ws && wr >= ws / &square) {
                    let msg = format!(
                        "w_s = {}, w_r = {}",
                        rational::format(ws),
                        rational::format(&wr)
                    );
                    report.fail(
                        format!("rounding eps={} element {e}", rational::format(&eps)),
                        msg,
                        None,
                    );
                }
            }
            let cap = (int(2) * inst.aspect_ratio() / &eps).ceil();
            if int(r.instance.max_weight as i64) > cap {
                report.fail(
                    format!("rounding eps={}", rational::format(&eps)),
                    "rounded W exceeds ceil(2R/eps)".into(),
                    None,
                );
            }
        }
    }
    Ok(())
}

fn auction(cfg: &SuiteConfig, report: &mut SuiteReport) {
    for eps in [ratio(1, 20), ratio(1, 10)] {
        for (k, g) in integer_corpus(cfg.cases, 8, 5, cfg.seed)
            .into_iter()
            .enumerate()
        {
            let name = format!("auction eps={} #{k}", rational::format(&eps));
            report.check_instance(name, &g.generate(), |spec, rep| {
                let inst = spec.build()?;
                let out = run_auction(&inst, &AuctionConfig::checked(eps.clone()))?;
                let (opt, _) = brute_force_opt(&inst)?;
                if !inst.is_common_independent(&out.set)? {
                    return Ok(Some("auction output is not common independent".into()));
                }
                let n = inst.support.len() as i64;
                let w = inst.max_weight().unwrap_or_else(Rational::zero);
                let slack = int(3) * &w * &eps * int(n);
                if out.weight < &opt - &slack {
                    return Ok(Some(format!(
                        "weight {} < OPT - 3W eps n = {}",
                        rational::format(&out.weight),
                        rational::format(&(opt - slack))
                    )));
                }
                let splitting = out.splitting_bound(&inst, &eps)?;
                if splitting < opt {
                    return Ok(Some(
                        "weight-splitting certificate is below the optimum".into(),
                    ));
                }
                if n > 0 {
                    let c = int(out.independence_calls as i64) * &eps * &eps / int(n);
                    rep.max("observed_c", rational::to_f64(&c));
                    if c > int(AUCTION_CALL_CONSTANT as i64) {
                        return Ok(Some(format!(
                            "{} independence calls exceed C n / eps^2",
                            out.independence_calls
                        )));
                    }
                }
                rep.max("max_iterations", out.iterations as f64);
                rep.metrics.insert("c".into(), AUCTION_CALL_CONSTANT as f64);
                Ok(None)
            });
        }
    }
}

/// Corpus of criterion-9 shape: `n <= 8`, log-uniform weights with aspect ratio at most 50.
pub fn ratio_corpus(cases: usize, seed: u64) -> Vec<GeneratorSpec> {
    corpus(cases, 8, WeightDist::LogUniform { ratio: 50 }, seed)
}

fn pipeline(cfg: &SuiteConfig, report: &mut SuiteReport) {
    let eps = ratio(1, 10);
    let solvers: [Box<dyn UnweightedSolver>; 2] =
        [Box::new(ExactSolver), Box::new(GreedySolver::default())];
    for solver in &solvers {
        for (k, g) in ratio_corpus(cfg.cases, cfg.seed).into_iter().enumerate() {
            let name = format!("pipeline {} #{k}", solver.name());
            report.check_instance(name, &g.generate(), |spec, rep| {
                let inst = spec.build()?;
                let r = weighted_mi_reduce(&inst, &eps, &**solver)?;
                let (opt, _) = brute_force_opt(&inst)?;
                if !inst.is_common_independent(&r.output)? {
                    return Ok(Some("output is not common independent".into()));
                }
                if r.weight < &r.composed_bound * &opt {
                    return Ok(Some(format!(
                        "ratio below the composed bound {}",
                        rational::format(&r.composed_bound)
                    )));
                }
                if !r.metering_holds() {
                    return Ok(Some("stage call counts do not add up to the ledger".into()));
                }
                if !opt.is_zero() {
                    rep.min(
                        &format!("min_ratio_{}", solver.name()),
                        rational::to_f64(&(&r.weight / &opt)),
                    );
                }
                rep.min(
                    &format!("min_bound_{}", solver.name()),
                    r.composed_bound_f64,
                );
                rep.max("max_constant", rational::to_f64(&r.composed_constant));
                Ok(None)
            });
        }
    }
}

/// The two halves of the models suite, runnable on their own.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelPart {
    Stream,
    Comm,
}

pub fn run_model_part(part: ModelPart, cfg: &SuiteConfig) -> SuiteReport {
    let mut report = SuiteReport::new(Suite::Models);
    let eps = ratio(1, 10);
    for (k, g) in ratio_corpus(cfg.cases, cfg.seed).into_iter().enumerate() {
        let name = format!("models {part:?} #{k}");
        report.check_instance(name, &g.generate(), |spec, rep| match part {
            ModelPart::Stream => stream_case(spec, &eps, k, rep),
            ModelPart::Comm => comm_case(spec, &eps, k, rep),
        });
    }
    report
}

fn models(cfg: &SuiteConfig, report: &mut SuiteReport) {
    for part in [ModelPart::Stream, ModelPart::Comm] {
        let r = run_model_part(part, cfg);
        report.cases += r.cases;
        report.violations += r.violations;
        report.metrics.extend(r.metrics);
        report.counterexamples.extend(r.counterexamples);
    }
    report.counterexamples.truncate(KEPT_COUNTEREXAMPLES);
}

fn stream_case(
    spec: &InstanceSpec,
    eps: &Rational,
    k: usize,
    rep: &mut SuiteReport,
) -> Result<Option<String>> {
    let inst = spec.build()?;
    let (opt, _) = brute_force_opt(&inst)?;
    let wcfg = WrapperConfig::for_instance(eps.clone(), &inst);
    let order = OrderSpec::Random(k as u64);

    let mut one = one_pass_greedy_weighted(inst.m1.clone(), inst.m2.clone(), wcfg.clone())?;
    let r = run_stream(
        &mut one,
        &inst,
        &StreamOptions {
            order,
            ..Default::default()
        },
    )?;
    if r.passes != 1 || r.ledger.passes != 1 {
        return Ok(Some(format!(
            "one-pass algorithm used {} passes",
            r.ledger.passes
        )));
    }
    if !opt.is_zero() {
        rep.min("min_ratio_one_pass", rational::to_f64(&(&r.weight / &opt)));
    }
    if r.weight < (ratio(1, 2) - eps) * &opt {
        return Ok(Some(format!(
            "one-pass weight {} < (1/2 - eps) OPT",
            rational::format(&r.weight)
        )));
    }
    if !r.space_accounting_holds() {
        return Ok(Some(
            "retained-element count exceeds the per-class accounting".into(),
        ));
    }

    let passes = 1 + (k % 3) as u32;
    let factory: StreamingFactory =
        Box::new(move || Box::new(StreamingGreedy::with_passes(passes)));
    let mut w = streaming_weighted_wrapper(factory, inst.m1.clone(), inst.m2.clone(), wcfg)?;
    let r = run_stream(
        &mut w,
        &inst,
        &StreamOptions {
            order,
            ..Default::default()
        },
    )?;
    if r.passes != passes || r.ledger.passes != passes as u64 {
        return Ok(Some(format!(
            "wrapper used {} passes around a {passes}-pass algorithm",
            r.ledger.passes
        )));
    }
    Ok(None)
}

fn comm_case(
    spec: &InstanceSpec,
    eps: &Rational,
    k: usize,
    rep: &mut SuiteReport,
) -> Result<Option<String>> {
    let inst = spec.build()?;
    let (opt, _) = brute_force_opt(&inst)?;
    let split: PartitionSpec = format!("random:{k}:0.5").parse()?;
    let (alice, bob) = split.split(&inst.support);
    let p = comm_weighted_wrapper(
        GreedyProtocol,
        WrapperConfig::for_instance(eps.clone(), &inst),
    )?;
    let r = run_protocol(&p, &inst, &alice, &bob)?;
    if r.protocol_violations != 0 {
        return Ok(Some(format!(
            "{} one-way flow violations",
            r.protocol_violations
        )));
    }
    let bound = r
        .bound
        .clone()
        .ok_or_else(|| Error::ContractViolation("wrapper reported no bound".into()))?;
    rep.max("max_comm_constant", rational::to_f64(&bound.constant));
    rep.max("max_message_elements", r.message_elements as f64);
    if !opt.is_zero() {
        rep.min("min_ratio_comm", rational::to_f64(&(&r.weight / &opt)));
    }
    if bound.product.is_positive() {
        rep.add("certified_nonvacuous", 1.0);
    }
    if r.weight < &bound.product * &opt {
        return Ok(Some(format!(
            "protocol ratio below its certified bound {}",
            rational::format(&bound.product)
        )));
    }
    if r.weight < ratio(1, 2) * (Rational::one() - int(COMM_CONSTANT) * eps) * &opt {
        return Ok(Some(format!(
            "protocol ratio below 1/2 (1 - {COMM_CONSTANT} eps)"
        )));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suite: Suite, cases: usize) -> SuiteReport {
        run_suite(
            suite,
            &SuiteConfig {
                cases,
                seed: 3,
                corrupt: false,
            },
        )
        .unwrap()
    }

    #[test]
    fn small_runs_pass() {
        for suite in Suite::ALL {
            let r = small(suite, 8);
            assert!(r.passed(), "{suite}: {:?}", r.counterexamples);
        }
    }

    #[test]
    fn corrupted_fixture_fails_with_witness() {
        let r = run_suite(
            Suite::Axioms,
            &SuiteConfig {
                cases: 1,
                seed: 1,
                corrupt: true,
            },
        )
        .unwrap();
        assert!(!r.passed());
        assert!(r.counterexamples[0].message.contains("witness"));
    }

    #[test]
    fn minimization_removes_irrelevant_elements() {
        let spec = GeneratorSpec {
            family1: FamilyKind::Uniform,
            family2: FamilyKind::Uniform,
            n: 6,
            seed: 2,
            weights: WeightDist::UniformInt { max: 3 },
        }
        .generate();
        // Fails while at least two elements remain.
        let (small, _) = minimize(spec, "start".into(), |s| (s.n >= 2).then(|| "still".into()));
        assert_eq!(small.n, 2);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}
