//! One-way two-party communication: Alice sends one message, Bob outputs.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::WeightedInstance;
use crate::matroid::{GuardedOracle, Oracle};
use crate::models::classes::{
    class_weight, finish, is_usable, ClassGrid, ClassKey, ClassOutcome, ClassStats, FinishConfig,
    ModelBound, UnfoldedPair,
};
use crate::models::stream::{weight_range, RunReport, WrapperConfig};
use crate::rational::{self, Rational};
use crate::reduction::unfold::DEFAULT_COPIES_PER_ELEMENT;
use crate::set::{ElementId, ElementSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MessageEntry {
    pub element: ElementId,
    /// 1-based copy index, 0 when the element is sent without unfolding.
    pub copy: u32,
    #[serde(with = "rational::serde_rational")]
    pub weight: Rational,
}

/// Entries of one class plus a constant-size summary of Alice's weights in it.
#[derive(Clone, Debug, Serialize)]
pub struct ClassBlock {
    pub key: ClassKey,
    pub stats: ClassStats,
    pub entries: Vec<MessageEntry>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Message {
    pub entries: Vec<MessageEntry>,
    pub blocks: Vec<ClassBlock>,
}

impl Message {
    /// Size in elements: one per entry (copies count separately).
    pub fn size(&self) -> u64 {
        (self.entries.len() + self.blocks.iter().map(|b| b.entries.len()).sum::<usize>()) as u64
    }

    /// Original elements disclosed to Bob.
    pub fn elements(&self) -> ElementSet {
        self.entries
            .iter()
            .chain(self.blocks.iter().flat_map(|b| &b.entries))
            .map(|m| m.element)
            .collect()
    }
}

pub struct ProtocolOutput {
    pub set: ElementSet,
    pub bound: Option<ModelBound>,
    pub classes: usize,
    pub chosen_index: Option<u64>,
}

/// Weighted one-way protocol. Alice's instance has support `N_A` and oracles guarded to
/// it; Bob's has support `N_B ∪ message` and oracles guarded to that set.
pub trait OneWayProtocol {
    fn name(&self) -> String;
    fn alice(&self, inst: &WeightedInstance) -> Result<Message>;
    fn bob(
        &self,
        message: &Message,
        own: &ElementSet,
        inst: &WeightedInstance,
    ) -> Result<ProtocolOutput>;
}

/// Cardinality protocol over a pair of oracles.
pub trait UnweightedProtocol {
    fn name(&self) -> String;
    fn alpha(&self) -> Rational;
    fn alice(&self, part: &ElementSet, m1: &Oracle, m2: &Oracle) -> Result<ElementSet>;
    fn bob(
        &self,
        message: &ElementSet,
        part: &ElementSet,
        m1: &Oracle,
        m2: &Oracle,
    ) -> Result<ElementSet>;
}

/// Alice sends her greedy common independent set; Bob extends it greedily over his part.
/// Together this is one greedy scan, so at least half the maximum.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyProtocol;

fn extend_greedy(
    mut s: ElementSet,
    part: &ElementSet,
    m1: &Oracle,
    m2: &Oracle,
) -> Result<ElementSet> {
    for e in part {
        let candidate = s.with(e);
        if m1.is_independent(&candidate)? && m2.is_independent(&candidate)? {
            s = candidate;
        }
    }
    Ok(s)
}

impl UnweightedProtocol for GreedyProtocol {
    fn name(&self) -> String {
        "greedy".into()
    }
    fn alpha(&self) -> Rational {
        rational::ratio(1, 2)
    }
    fn alice(&self, part: &ElementSet, m1: &Oracle, m2: &Oracle) -> Result<ElementSet> {
        extend_greedy(ElementSet::new(), part, m1, m2)
    }
    fn bob(
        &self,
        message: &ElementSet,
        part: &ElementSet,
        m1: &Oracle,
        m2: &Oracle,
    ) -> Result<ElementSet> {
        if !(m1.is_independent(message)? && m2.is_independent(message)?) {
            return Err(Error::ProtocolViolation(
                "message is not common independent".into(),
            ));
        }
        extend_greedy(message.clone(), part, m1, m2)
    }
}

/// An unweighted protocol run directly on original elements, ignoring weights.
pub struct Plain<P>(pub P);

impl<P: UnweightedProtocol> OneWayProtocol for Plain<P> {
    fn name(&self) -> String {
        format!("plain[{}]", self.0.name())
    }
    fn alice(&self, inst: &WeightedInstance) -> Result<Message> {
        let sent = self.0.alice(&inst.support, &inst.m1, &inst.m2)?;
        let entries = sent
            .iter()
            .map(|e| MessageEntry {
                element: e,
                copy: 0,
                weight: inst.weight(e).clone(),
            })
            .collect();
        Ok(Message {
            entries,
            blocks: vec![],
        })
    }
    fn bob(
        &self,
        message: &Message,
        own: &ElementSet,
        inst: &WeightedInstance,
    ) -> Result<ProtocolOutput> {
        let set = self.0.bob(&message.elements(), own, &inst.m1, &inst.m2)?;
        Ok(ProtocolOutput {
            set,
            bound: None,
            classes: 0,
            chosen_index: None,
        })
    }
}

/// Runs the unweighted protocol once per spread class on unfolded copies.
pub struct CommWeightedWrapper<P> {
    inner: P,
    cfg: WrapperConfig,
    grid: ClassGrid,
}

pub fn comm_weighted_wrapper<P: UnweightedProtocol>(
    inner: P,
    cfg: WrapperConfig,
) -> Result<CommWeightedWrapper<P>> {
    rational::check_epsilon(&cfg.epsilon)?;
    let grid = ClassGrid::new(
        &cfg.epsilon,
        &cfg.range.0,
        &cfg.range.1,
        cfg.class_weight_cap,
    )?;
    Ok(CommWeightedWrapper { inner, cfg, grid })
}

impl<P: UnweightedProtocol> CommWeightedWrapper<P> {
    fn budget(&self, n: usize) -> usize {
        self.cfg
            .copy_budget
            .unwrap_or(DEFAULT_COPIES_PER_ELEMENT * n.max(1))
    }

    /// Usable elements of `part` in class `key`, with their summary.
    fn class_members(
        &self,
        key: ClassKey,
        part: &ElementSet,
        inst: &WeightedInstance,
    ) -> Result<(ElementSet, ClassStats)> {
        let mut members = ElementSet::new();
        let mut stats = ClassStats::default();
        for e in part {
            let w = inst.weight(e);
            if *w < self.cfg.range.0 || *w > self.cfg.range.1 {
                return Err(Error::Input(format!(
                    "weight of element {e} lies outside the declared range"
                )));
            }
            if self.grid.memberships(w).contains(&key) && is_usable(&inst.m1, &inst.m2, e)? {
                members.insert(e);
                stats.observe(w);
            }
        }
        Ok((members, stats))
    }
}

impl<P: UnweightedProtocol> OneWayProtocol for CommWeightedWrapper<P> {
    fn name(&self) -> String {
        format!("weighted[{}]", self.inner.name())
    }

    fn alice(&self, inst: &WeightedInstance) -> Result<Message> {
        let mut blocks = Vec::new();
        for key in self.grid.all_keys() {
            let (members, stats) = self.class_members(key, &inst.support, inst)?;
            let unit = self.grid.unit(key);
            let pair = UnfoldedPair::new(&inst.m1, &inst.m2, self.budget(inst.ground_size()));
            let mut copies = ElementSet::new();
            for e in &members {
                let wc = class_weight(inst.weight(e), &unit)?;
                if wc > 0 {
                    copies = copies.union(&pair.copies(e, wc)?.into_iter().collect());
                }
            }
            let sent = self.inner.alice(&copies, &pair.m1, &pair.m2)?;
            let entries = sent
                .iter()
                .map(|c| {
                    let e = pair.unfolding.owner(c);
                    MessageEntry {
                        element: e,
                        copy: pair.unfolding.copy_index(c),
                        weight: inst.weight(e).clone(),
                    }
                })
                .collect();
            blocks.push(ClassBlock {
                key,
                stats,
                entries,
            });
        }
        Ok(Message {
            entries: vec![],
            blocks,
        })
    }

    fn bob(
        &self,
        message: &Message,
        own: &ElementSet,
        inst: &WeightedInstance,
    ) -> Result<ProtocolOutput> {
        let mut weights = vec![Rational::zero(); inst.ground_size()];
        for e in own {
            weights[e.index()] = inst.weight(e).clone();
        }
        for m in message.blocks.iter().flat_map(|b| &b.entries) {
            weights[m.element.index()] = m.weight.clone();
        }
        let mut outcomes = Vec::new();
        for key in self.grid.all_keys() {
            let block = message.blocks.iter().find(|b| b.key == key);
            let (members, mut stats) = self.class_members(key, own, inst)?;
            if let Some(b) = block {
                stats.merge(&b.stats);
            }
            if stats.count == 0 {
                continue;
            }
            let unit = self.grid.unit(key);
            let pair = UnfoldedPair::new(&inst.m1, &inst.m2, self.budget(inst.ground_size()));
            let mut sent = ElementSet::new();
            for m in block.map(|b| b.entries.as_slice()).unwrap_or_default() {
                let wc = class_weight(&m.weight, &unit)?;
                let copies = pair.copies(m.element, wc)?;
                let c = copies.get(m.copy as usize - 1).ok_or_else(|| {
                    Error::ProtocolViolation(format!(
                        "message names copy {} of element {}",
                        m.copy, m.element
                    ))
                })?;
                sent.insert(*c);
            }
            let mut part = ElementSet::new();
            for e in &members {
                let wc = class_weight(inst.weight(e), &unit)?;
                if wc > 0 {
                    part = part.union(&pair.copies(e, wc)?.into_iter().collect());
                }
            }
            let solution = self.inner.bob(&sent, &part, &pair.m1, &pair.m2)?;
            outcomes.push(ClassOutcome {
                key,
                unit,
                stats,
                pair,
                solution,
            });
        }
        let done = finish(
            outcomes,
            &self.grid,
            &FinishConfig {
                m1: &inst.m1,
                m2: &inst.m2,
                weights: &weights,
                alpha: self.inner.alpha(),
                epsilon: &self.cfg.epsilon,
                extraction: self.cfg.extraction,
                check_invariants: self.cfg.check_invariants,
            },
        )?;
        Ok(ProtocolOutput {
            set: done.set,
            bound: Some(done.bound),
            classes: done.classes,
            chosen_index: done.chosen_index,
        })
    }
}

/// Alice's share: explicit ids, or each element independently with probability `fraction`.
#[derive(Clone, Debug, PartialEq)]
pub enum PartitionSpec {
    Ids(Vec<u32>),
    Random { seed: u64, fraction: f64 },
}

impl PartitionSpec {
    /// `(N_A, N_B)` over `support`.
    pub fn split(&self, support: &ElementSet) -> (ElementSet, ElementSet) {
        let alice: ElementSet = match self {
            PartitionSpec::Ids(ids) => {
                ElementSet::from_ids(ids.iter().copied()).intersection(support)
            }
            PartitionSpec::Random { seed, fraction } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                support.iter().filter(|_| rng.gen_bool(*fraction)).collect()
            }
        };
        let bob = support.difference(&alice);
        (alice, bob)
    }
}

impl FromStr for PartitionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "partition {s:?} is not an id list or random:<seed>:<fraction>"
            ))
        };
        if let Some(rest) = s.strip_prefix("random:") {
            let (seed, fraction) = rest.split_once(':').ok_or_else(bad)?;
            let seed = seed.parse().map_err(|_| bad())?;
            let fraction: f64 = fraction.parse().map_err(|_| bad())?;
            if !(0.0..=1.0).contains(&fraction) {
                return Err(bad());
            }
            return Ok(PartitionSpec::Random { seed, fraction });
        }
        if s.is_empty() || s == "none" {
            return Ok(PartitionSpec::Ids(vec![]));
        }
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<Vec<u32>>>()
            .map(PartitionSpec::Ids)
    }
}

impl fmt::Display for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionSpec::Ids(ids) if ids.is_empty() => write!(f, "none"),
            PartitionSpec::Ids(ids) => {
                write!(
                    f,
                    "{}",
                    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
                )
            }
            PartitionSpec::Random { seed, fraction } => write!(f, "random:{seed}:{fraction}"),
        }
    }
}

/// Runs Alice, then Bob on guarded oracles, and checks the output.
pub fn run_protocol(
    p: &dyn OneWayProtocol,
    inst: &WeightedInstance,
    alice: &ElementSet,
    bob: &ElementSet,
) -> Result<RunReport> {
    if !alice.is_disjoint(bob) || alice.union(bob) != inst.support {
        return Err(Error::Input(
            "partition must cover the ground set disjointly".into(),
        ));
    }
    let ledger = inst.m1.ledger().clone();
    let start = ledger.snapshot();
    let range = weight_range(inst);
    let guarded = |allowed: &ElementSet| -> (Arc<GuardedOracle>, Arc<GuardedOracle>) {
        (
            Arc::new(GuardedOracle::new(inst.m1.clone(), allowed.clone())),
            Arc::new(GuardedOracle::new(inst.m2.clone(), allowed.clone())),
        )
    };
    let party = |g: &(Arc<GuardedOracle>, Arc<GuardedOracle>)| -> Result<WeightedInstance> {
        WeightedInstance::new(g.0.clone(), g.1.clone(), inst.weights.clone())?
            .with_weight_range(range.0.clone(), range.1.clone())
    };

    let ga = guarded(alice);
    let message = p.alice(&party(&ga)?)?;
    ledger.record_message(message.size());
    let gb = guarded(&bob.union(&message.elements()));
    let result = p.bob(&message, bob, &party(&gb)?);
    let protocol_violations =
        ga.0.violations() + ga.1.violations() + gb.0.violations() + gb.1.violations();
    let out = result?;
    if protocol_violations > 0 {
        return Err(Error::ProtocolViolation(format!(
            "{protocol_violations} guarded queries were rejected"
        )));
    }
    if !inst.is_common_independent(&out.set)? {
        return Err(Error::ContractViolation(format!(
            "{} returned a set that is not common independent",
            p.name()
        )));
    }
    let weight = inst.weight_of(&out.set);
    Ok(RunReport {
        model: "comm".into(),
        algorithm: p.name(),
        weight_f64: rational::to_f64(&weight),
        weight,
        output: out.set,
        passes: 0,
        stored_elements_peak: 0,
        message_elements: message.size(),
        space_violations: 0,
        protocol_violations,
        classes: out.classes,
        class_peak_max: 0,
        chosen_index: out.chosen_index,
        bound: out.bound,
        range_declared: inst.weight_range.is_some(),
        ledger: ledger.snapshot().since(&start),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures;
    use crate::rational::{int, ratio};

    fn wrapped(inst: &WeightedInstance) -> CommWeightedWrapper<GreedyProtocol> {
        comm_weighted_wrapper(
            GreedyProtocol,
            WrapperConfig::for_instance(ratio(1, 10), inst),
        )
        .unwrap()
    }

    #[test]
    fn e1_wrapped_greedy() {
        let inst = fixtures::e1().build().unwrap();
        let (a, b) = ("0,1".parse::<PartitionSpec>().unwrap()).split(&inst.support);
        let r = run_protocol(&wrapped(&inst), &inst, &a, &b).unwrap();
        let bound = r.bound.clone().unwrap();
        assert!(r.weight >= &bound.product * int(4));
        assert_eq!(r.protocol_violations, 0);
        let plain = run_protocol(&Plain(GreedyProtocol), &inst, &a, &b).unwrap();
        assert!(plain.message_elements <= 2);
    }

    #[test]
    fn one_sided_partitions() {
        let inst = fixtures::figure1().build().unwrap();
        let all = inst.support.clone();
        let none = ElementSet::new();
        let bob_alone = run_protocol(&Plain(GreedyProtocol), &inst, &none, &all).unwrap();
        assert_eq!(bob_alone.message_elements, 0);
        let alice_alone = run_protocol(&Plain(GreedyProtocol), &inst, &all, &none).unwrap();
        assert_eq!(
            alice_alone.output.len() as u64,
            alice_alone.message_elements
        );
        // Everything on Bob's side: Alice sends only empty class blocks.
        let w = wrapped(&inst);
        let msg = w
            .alice(&WeightedInstance {
                support: none.clone(),
                ..inst.clone()
            })
            .unwrap();
        assert!(!msg.blocks.is_empty() && msg.size() == 0);
    }

    #[test]
    fn bad_partitions_rejected() {
        let inst = fixtures::e1().build().unwrap();
        let a = ElementSet::from_ids([0, 1]);
        assert!(matches!(
            run_protocol(&Plain(GreedyProtocol), &inst, &a, &a),
            Err(Error::Input(_))
        ));
        assert!("random:3:1.5".parse::<PartitionSpec>().is_err());
        let spec: PartitionSpec = "random:3:0.5".parse().unwrap();
        assert_eq!(spec.split(&inst.support), spec.split(&inst.support));
        assert_eq!(spec.to_string(), "random:3:0.5");
    }

    struct Snooping;

    impl OneWayProtocol for Snooping {
        fn name(&self) -> String {
            "snooping".into()
        }
        fn alice(&self, _: &WeightedInstance) -> Result<Message> {
            Ok(Message::default())
        }
        fn bob(
            &self,
            _: &Message,
            _: &ElementSet,
            inst: &WeightedInstance,
        ) -> Result<ProtocolOutput> {
            inst.m1.is_independent(&ElementSet::from_ids([0]))?;
            unreachable!("the guard rejects the query")
        }
    }

    #[test]
    fn bob_cannot_read_undisclosed_elements() {
        let inst = fixtures::e1().build().unwrap();
        let err = run_protocol(
            &Snooping,
            &inst,
            &ElementSet::from_ids([0]),
            &ElementSet::from_ids([1, 2]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ProtocolViolation(_)));
    }
}
