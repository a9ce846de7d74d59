//! Weighted instances and their JSON form.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::ResourceLedger;
use crate::matroid::{
    restrict, GraphicMatroid, LinearMatroidGf2, Oracle, PartitionMatroid, UniformMatroid,
};
use crate::rational::{self, Rational};
use crate::set::{ElementId, ElementSet};

/// Two oracles over one id space plus positive weights on `support`.
///
/// Weights are indexed by id; entries outside `support` are ignored.
#[derive(Clone)]
pub struct WeightedInstance {
    pub m1: Oracle,
    pub m2: Oracle,
    pub weights: Vec<Rational>,
    pub support: ElementSet,
    /// Declared a-priori `[min, max]` weight range, used by stream and protocol wrappers.
    pub weight_range: Option<(Rational, Rational)>,
}

impl WeightedInstance {
    pub fn new(m1: Oracle, m2: Oracle, weights: Vec<Rational>) -> Result<Self> {
        if m1.ground_size() != m2.ground_size() {
            return Err(Error::Input(format!(
                "matroids disagree on ground size: {} vs {}",
                m1.ground_size(),
                m2.ground_size()
            )));
        }
        if weights.len() != m1.ground_size() {
            return Err(Error::Input(format!(
                "{} weights for {} elements",
                weights.len(),
                m1.ground_size()
            )));
        }
        let support = m1.domain().intersection(&m2.domain());
        let inst = WeightedInstance {
            m1,
            m2,
            weights,
            support,
            weight_range: None,
        };
        inst.check_weights()?;
        Ok(inst)
    }

    fn check_weights(&self) -> Result<()> {
        for e in &self.support {
            if !self.weights[e.index()].is_positive() {
                return Err(Error::Input(format!(
                    "weight of element {e} is {}, expected > 0",
                    rational::format(&self.weights[e.index()])
                )));
            }
        }
        Ok(())
    }

    pub fn with_weight_range(mut self, min: Rational, max: Rational) -> Result<Self> {
        if !min.is_positive() || max < min {
            return Err(Error::Input(
                "weight range must satisfy 0 < min <= max".into(),
            ));
        }
        if let Some(e) = self
            .support
            .iter()
            .find(|e| self.weights[e.index()] < min || self.weights[e.index()] > max)
        {
            return Err(Error::Input(format!(
                "weight of element {e} is outside the declared range"
            )));
        }
        self.weight_range = Some((min, max));
        Ok(self)
    }

    /// Size of the id space.
    pub fn ground_size(&self) -> usize {
        self.weights.len()
    }

    /// Number of elements in play.
    pub fn n(&self) -> usize {
        self.support.len()
    }

    pub fn weight(&self, e: ElementId) -> &Rational {
        &self.weights[e.index()]
    }

    pub fn weight_of(&self, s: &ElementSet) -> Rational {
        s.iter()
            .fold(Rational::zero(), |acc, e| acc + &self.weights[e.index()])
    }

    pub fn max_weight(&self) -> Option<Rational> {
        rational::max_of(self.support.iter().map(|e| &self.weights[e.index()]))
    }

    pub fn min_weight(&self) -> Option<Rational> {
        rational::min_of(self.support.iter().map(|e| &self.weights[e.index()]))
    }

    /// `max / min` over the support; 1 for an empty support.
    pub fn aspect_ratio(&self) -> Rational {
        match (self.max_weight(), self.min_weight()) {
            (Some(hi), Some(lo)) => hi / lo,
            _ => Rational::one(),
        }
    }

    /// Same oracles masked to `s ∩ support`.
    pub fn restrict(&self, s: &ElementSet) -> Result<Self> {
        let support = s.intersection(&self.support);
        Ok(WeightedInstance {
            m1: restrict(self.m1.clone(), &support)?,
            m2: restrict(self.m2.clone(), &support)?,
            weights: self.weights.clone(),
            support,
            weight_range: self.weight_range.clone(),
        })
    }

    /// Same structure with different weights.
    pub fn reweighted(&self, weights: Vec<Rational>) -> Result<Self> {
        let inst = WeightedInstance {
            weights,
            ..self.clone()
        };
        inst.check_weights()?;
        Ok(inst)
    }

    /// `s` lies in the support and is independent in both matroids.
    pub fn is_common_independent(&self, s: &ElementSet) -> Result<bool> {
        Ok(
            s.is_subset(&self.support)
                && self.m1.is_independent(s)?
                && self.m2.is_independent(s)?,
        )
    }

    /// Support elements that are loops in either matroid and so never appear in a solution.
    pub fn loops(&self) -> Result<ElementSet> {
        let mut out = ElementSet::new();
        for e in &self.support {
            let s = ElementSet::singleton(e);
            if !self.m1.is_independent(&s)? || !self.m2.is_independent(&s)? {
                out.insert(e);
            }
        }
        Ok(out)
    }
}

/// Integer weights in `{1, ..., max_weight}` on the support.
#[derive(Clone)]
pub struct IntegerWeightedInstance {
    pub m1: Oracle,
    pub m2: Oracle,
    pub weights: Vec<u64>,
    pub support: ElementSet,
    pub max_weight: u64,
}

impl IntegerWeightedInstance {
    pub fn new(m1: Oracle, m2: Oracle, weights: Vec<u64>, support: ElementSet) -> Result<Self> {
        if m1.ground_size() != m2.ground_size() || weights.len() != m1.ground_size() {
            return Err(Error::Input(
                "ground sizes and weight count disagree".into(),
            ));
        }
        let domain = m1.domain().intersection(&m2.domain());
        if !support.is_subset(&domain) {
            return Err(Error::Input(
                "support lies outside the oracles' domain".into(),
            ));
        }
        if let Some(e) = support.iter().find(|e| weights[e.index()] == 0) {
            return Err(Error::Input(format!(
                "element {e} has weight 0; integer weights start at 1"
            )));
        }
        let max_weight = support
            .iter()
            .map(|e| weights[e.index()])
            .max()
            .unwrap_or(1);
        Ok(IntegerWeightedInstance {
            m1,
            m2,
            weights,
            support,
            max_weight,
        })
    }

    /// Integer view of a weighted instance whose support weights are all integers.
    pub fn from_weighted(inst: &WeightedInstance) -> Result<Self> {
        let weights = inst
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                if !inst.support.contains(ElementId(i as u32)) {
                    Ok(0)
                } else if w.is_integer() {
                    rational::floor_u64(w)
                } else {
                    Err(Error::Input(format!(
                        "weight {} of element {i} is not an integer",
                        rational::format(w)
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            inst.m1.clone(),
            inst.m2.clone(),
            weights,
            inst.support.clone(),
        )
    }

    pub fn to_weighted(&self) -> WeightedInstance {
        WeightedInstance {
            m1: self.m1.clone(),
            m2: self.m2.clone(),
            weights: self
                .weights
                .iter()
                .map(|&w| rational::int(w as i64))
                .collect(),
            support: self.support.clone(),
            weight_range: None,
        }
    }

    pub fn ground_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weight_of(&self, s: &ElementSet) -> u64 {
        s.iter().map(|e| self.weights[e.index()]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Uniform {
        k: usize,
    },
    Partition {
        blocks: Vec<u32>,
        caps: Vec<u32>,
    },
    Graphic {
        vertices: usize,
        edges: Vec<[u32; 2]>,
    },
    LinearGf2 {
        rows: usize,
        columns: Vec<String>,
    },
}

impl FamilySpec {
    pub fn build(&self, n: usize, ledger: Arc<ResourceLedger>) -> Result<Oracle> {
        let count_check = |len: usize, what: &str| {
            if len == n {
                Ok(())
            } else {
                Err(Error::Input(format!(
                    "{what} lists {len} elements, instance has {n}"
                )))
            }
        };
        Ok(match self {
            FamilySpec::Uniform { k } => Arc::new(UniformMatroid::new(n, *k, ledger)),
            FamilySpec::Partition { blocks, caps } => {
                count_check(blocks.len(), "partition")?;
                Arc::new(PartitionMatroid::new(blocks.clone(), caps.clone(), ledger)?)
            }
            FamilySpec::Graphic { vertices, edges } => {
                count_check(edges.len(), "graphic")?;
                Arc::new(GraphicMatroid::new(
                    *vertices,
                    edges.iter().map(|e| (e[0], e[1])).collect(),
                    ledger,
                )?)
            }
            FamilySpec::LinearGf2 { rows, columns } => {
                count_check(columns.len(), "linear_gf2")?;
                Arc::new(LinearMatroidGf2::from_bitstrings(*rows, columns, ledger)?)
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Uniform { .. } => "uniform",
            FamilySpec::Partition { .. } => "partition",
            FamilySpec::Graphic { .. } => "graphic",
            FamilySpec::LinearGf2 { .. } => "linear_gf2",
        }
    }

    /// The family on `n - 1` elements with element `e` deleted and later ids shifted down.
    fn without_element(&self, e: usize, n: usize) -> FamilySpec {
        let drop = |v: &[u32]| -> Vec<u32> {
            v.iter()
                .enumerate()
                .filter(|(i, _)| *i != e)
                .map(|(_, &x)| x)
                .collect()
        };
        match self {
            FamilySpec::Uniform { k } => FamilySpec::Uniform { k: (*k).min(n - 1) },
            FamilySpec::Partition { blocks, caps } => FamilySpec::Partition {
                blocks: drop(blocks),
                caps: caps.clone(),
            },
            FamilySpec::Graphic { vertices, edges } => FamilySpec::Graphic {
                vertices: *vertices,
                edges: edges
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != e)
                    .map(|(_, &x)| x)
                    .collect(),
            },
            FamilySpec::LinearGf2 { rows, columns } => FamilySpec::LinearGf2 {
                rows: *rows,
                columns: columns
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != e)
                    .map(|(_, c)| c.clone())
                    .collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightRange {
    #[serde(with = "rational::serde_rational")]
    pub min: Rational,
    #[serde(with = "rational::serde_rational")]
    pub max: Rational,
}

/// File form of a weighted instance. Weights are `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub n: usize,
    pub matroid1: FamilySpec,
    pub matroid2: FamilySpec,
    #[serde(with = "rational::serde_rational_vec")]
    pub weights: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_range: Option<WeightRange>,
}

impl InstanceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: InstanceSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if spec.weights.len() != spec.n {
            return Err(Error::Parse(format!(
                "{} weights for n = {}",
                spec.weights.len(),
                spec.n
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Builds both oracles on one shared ledger.
    pub fn build_with_ledger(&self, ledger: Arc<ResourceLedger>) -> Result<WeightedInstance> {
        let m1 = self.matroid1.build(self.n, ledger.clone())?;
        let m2 = self.matroid2.build(self.n, ledger)?;
        let inst = WeightedInstance::new(m1, m2, self.weights.clone())?;
        match &self.weight_range {
            Some(r) => inst.with_weight_range(r.min.clone(), r.max.clone()),
            None => Ok(inst),
        }
    }

    pub fn build(&self) -> Result<WeightedInstance> {
        self.build_with_ledger(Arc::new(ResourceLedger::new()))
    }

    /// The instance with element `e` deleted; later ids shift down by one.
    pub fn without_element(&self, e: usize) -> InstanceSpec {
        InstanceSpec {
            n: self.n - 1,
            matroid1: self.matroid1.without_element(e, self.n),
            matroid2: self.matroid2.without_element(e, self.n),
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != e)
                .map(|(_, w)| w.clone())
                .collect(),
            weight_range: self.weight_range.clone(),
        }
    }
}

/// Small named instances used across tests and documentation.
pub mod fixtures {
    use super::*;

    /// Partition `{a,b}` cap 1, `{c}` cap 1 against uniform `k = 2`; weights `a:3, b:2, c:1`.
    pub fn e1() -> InstanceSpec {
        InstanceSpec {
            n: 3,
            matroid1: FamilySpec::Partition {
                blocks: vec![0, 0, 1],
                caps: vec![1, 1],
            },
            matroid2: FamilySpec::Uniform { k: 2 },
            weights: vec![rational::int(3), rational::int(2), rational::int(1)],
            weight_range: None,
        }
    }

    /// Two graphic matroids on edges `a, b, c, d` with weights `3, 1, 2, 2`.
    /// First graph: triangle with `a` parallel to `d`. Second: `a ∥ c` and `b ∥ d`.
    pub fn figure1() -> InstanceSpec {
        InstanceSpec {
            n: 4,
            matroid1: FamilySpec::Graphic {
                vertices: 3,
                edges: vec![[0, 2], [0, 1], [1, 2], [0, 2]],
            },
            matroid2: FamilySpec::Graphic {
                vertices: 4,
                edges: vec![[0, 1], [2, 3], [0, 1], [2, 3]],
            },
            weights: [3, 1, 2, 2].iter().map(|&w| rational::int(w)).collect(),
            weight_range: None,
        }
    }

    /// One element, free in both matroids.
    pub fn single(weight: Rational) -> InstanceSpec {
        InstanceSpec {
            n: 1,
            matroid1: FamilySpec::Uniform { k: 1 },
            matroid2: FamilySpec::Uniform { k: 1 },
            weights: vec![weight],
            weight_range: None,
        }
    }

    pub fn empty() -> InstanceSpec {
        InstanceSpec {
            n: 0,
            matroid1: FamilySpec::Uniform { k: 0 },
            matroid2: FamilySpec::Uniform { k: 0 },
            weights: vec![],
            weight_range: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_schema() {
        let spec = fixtures::e1();
        let text = spec.to_json();
        assert!(text.contains("\"partition\""));
        assert!(text.contains("\"3/1\""));
        assert_eq!(InstanceSpec::from_json(&text).unwrap(), spec);
        let raw = r#"{"n":2,"matroid1":{"uniform":{"k":1}},"matroid2":{"linear_gf2":{"rows":1,"columns":["1","1"]}},"weights":["1/2","3"]}"#;
        let parsed = InstanceSpec::from_json(raw).unwrap();
        assert_eq!(parsed.weights[1], rational::int(3));
        assert!(matches!(InstanceSpec::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_bad_weights_and_sizes() {
        let mut spec = fixtures::e1();
        spec.weights[0] = rational::int(0);
        assert!(matches!(spec.build(), Err(Error::Input(_))));
        let mut spec = fixtures::e1();
        spec.matroid1 = FamilySpec::Partition {
            blocks: vec![0, 0],
            caps: vec![1],
        };
        assert!(spec.build().is_err());
    }

    #[test]
    fn deleting_an_element_shifts_ids() {
        let spec = fixtures::figure1().without_element(1);
        assert_eq!(spec.n, 3);
        let inst = spec.build().unwrap();
        assert_eq!(
            inst.weights,
            vec![rational::int(3), rational::int(2), rational::int(2)]
        );
        assert!(inst
            .is_common_independent(&ElementSet::from_ids([1, 2]))
            .unwrap());
    }
}
