//! Unweighted matroid intersection solvers.

use std::collections::VecDeque;

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matroid::MatroidOracle;
use crate::order::OrderSpec;
use crate::rational;
use crate::set::{ElementId, ElementSet};

/// Cardinality solver with a declared approximation guarantee.
pub trait UnweightedSolver: Send + Sync {
    fn name(&self) -> String;
    /// `|result| >= alpha * max` on every instance.
    fn alpha(&self) -> BigRational;
    fn solve(&self, m1: &dyn MatroidOracle, m2: &dyn MatroidOracle) -> Result<ElementSet>;
}

/// Registered solvers: `exact`, and `greedy` scanning in `order`.
pub fn solver_by_name(name: &str, order: OrderSpec) -> Result<Box<dyn UnweightedSolver>> {
    match name {
        "exact" => Ok(Box::new(ExactSolver)),
        "greedy" => Ok(Box::new(GreedySolver { order })),
        _ => Err(Error::Input(format!(
            "unknown solver {name:?}; expected exact or greedy"
        ))),
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ExactSolver;

impl UnweightedSolver for ExactSolver {
    fn name(&self) -> String {
        "exact".into()
    }
    fn alpha(&self) -> BigRational {
        rational::int(1)
    }
    fn solve(&self, m1: &dyn MatroidOracle, m2: &dyn MatroidOracle) -> Result<ElementSet> {
        exact_mi(m1, m2)
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct GreedySolver {
    pub order: OrderSpec,
}

impl UnweightedSolver for GreedySolver {
    fn name(&self) -> String {
        match self.order {
            OrderSpec::Natural => "greedy".into(),
            other => format!("greedy[{other}]"),
        }
    }
    fn alpha(&self) -> BigRational {
        rational::ratio(1, 2)
    }
    fn solve(&self, m1: &dyn MatroidOracle, m2: &dyn MatroidOracle) -> Result<ElementSet> {
        let domain: Vec<ElementId> = m1.domain().intersection(&m2.domain()).iter().collect();
        greedy_mi(m1, m2, &self.order.apply(&domain))
    }
}

/// Adds each element of `order` that keeps the set independent in both matroids.
/// `order` must be a permutation of the shared domain.
pub fn greedy_mi(
    m1: &dyn MatroidOracle,
    m2: &dyn MatroidOracle,
    order: &[ElementId],
) -> Result<ElementSet> {
    let domain = m1.domain().intersection(&m2.domain());
    let listed: ElementSet = order.iter().copied().collect();
    if listed.len() != order.len() || listed != domain {
        return Err(Error::Precondition(
            "greedy order is not a permutation of the ground set".into(),
        ));
    }
    let mut s = ElementSet::new();
    for &e in order {
        let candidate = s.with(e);
        if m1.is_independent(&candidate)? && m2.is_independent(&candidate)? {
            s = candidate;
        }
    }
    Ok(s)
}

/// Maximum-cardinality common independent set by shortest augmenting paths.
///
/// Starts from the natural-order greedy solution. For the current `S`, sources are `x`
/// with `S + x ∈ I1`, sinks are `x` with `S + x ∈ I2`; arcs `y -> x` when `S - y + x ∈ I1`
/// and `x -> y` when `S - y + x ∈ I2`. Arcs are probed lazily during breadth-first search,
/// which stops at the first sink reached.
pub fn exact_mi(m1: &dyn MatroidOracle, m2: &dyn MatroidOracle) -> Result<ElementSet> {
    let domain: Vec<ElementId> = m1.domain().intersection(&m2.domain()).iter().collect();
    let mut s = greedy_mi(m1, m2, &domain)?;
    while let Some(path) = augmenting_path(m1, m2, &domain, &s)? {
        for e in path {
            if !s.remove(e) {
                s.insert(e);
            }
        }
    }
    Ok(s)
}

fn augmenting_path(
    m1: &dyn MatroidOracle,
    m2: &dyn MatroidOracle,
    domain: &[ElementId],
    s: &ElementSet,
) -> Result<Option<Vec<ElementId>>> {
    let outside: Vec<ElementId> = domain.iter().copied().filter(|e| !s.contains(*e)).collect();
    let inside: Vec<ElementId> = s.iter().collect();
    let max_id = domain.last().map_or(0, |e| e.index() + 1);
    let mut parent: Vec<Option<ElementId>> = vec![None; max_id];
    let mut visited = vec![false; max_id];
    let mut is_sink = vec![false; max_id];
    let mut queue = VecDeque::new();

    for &x in &outside {
        let with_x = s.with(x);
        let sink = m2.is_independent(&with_x)?;
        is_sink[x.index()] = sink;
        if m1.is_independent(&with_x)? {
            if sink {
                return Ok(Some(vec![x]));
            }
            visited[x.index()] = true;
            queue.push_back(x);
        }
    }

    while let Some(node) = queue.pop_front() {
        if s.contains(node) {
            let without = s.without(node);
            for &x in &outside {
                if visited[x.index()] || !m1.is_independent(&without.with(x))? {
                    continue;
                }
                visited[x.index()] = true;
                parent[x.index()] = Some(node);
                if is_sink[x.index()] {
                    return Ok(Some(trace(&parent, x)));
                }
                queue.push_back(x);
            }
        } else {
            let with_x = s.with(node);
            for &y in &inside {
                if visited[y.index()] || !m2.is_independent(&with_x.without(y))? {
                    continue;
                }
                visited[y.index()] = true;
                parent[y.index()] = Some(node);
                queue.push_back(y);
            }
        }
    }
    Ok(None)
}

fn trace(parent: &[Option<ElementId>], end: ElementId) -> Vec<ElementId> {
    let mut path = vec![end];
    let mut cur = end;
    while let Some(p) = parent[cur.index()] {
        path.push(p);
        cur = p;
    }
    path
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::instance::{fixtures, FamilySpec, InstanceSpec};
    use crate::matroid::{PartitionMatroid, UniformMatroid};
    use crate::reduction::brute_force_max_cardinality;

    #[test]
    fn e1_has_size_two() {
        let inst = fixtures::e1().build().unwrap();
        assert_eq!(exact_mi(&*inst.m1, &*inst.m2).unwrap().len(), 2);
    }

    #[test]
    fn self_intersection_is_a_base() {
        let inst = fixtures::figure1().build().unwrap();
        let s = exact_mi(&*inst.m1, &*inst.m1).unwrap();
        assert_eq!(s.len(), inst.m1.rank(&ElementSet::full(4)).unwrap());
    }

    #[test]
    fn zero_capacity_gives_empty() {
        let p = PartitionMatroid::new(vec![0, 1, 2], vec![1, 1, 1], Arc::default()).unwrap();
        let u = UniformMatroid::new(3, 0, Arc::default());
        assert_eq!(exact_mi(&p, &u).unwrap(), ElementSet::new());
        assert_eq!(
            greedy_mi(&p, &u, &[]).unwrap_err(),
            Error::Precondition("greedy order is not a permutation of the ground set".into())
        );
    }

    #[test]
    fn greedy_can_be_exactly_half() {
        // Path a-b-c: partitions {a,b}, {c} against {a}, {b,c}. Taking b first blocks both a and c.
        let inst = InstanceSpec {
            n: 3,
            matroid1: FamilySpec::Partition {
                blocks: vec![0, 0, 1],
                caps: vec![1, 1],
            },
            matroid2: FamilySpec::Partition {
                blocks: vec![0, 1, 1],
                caps: vec![1, 1],
            },
            weights: vec![rational::int(1); 3],
            weight_range: None,
        }
        .build()
        .unwrap();
        let g = greedy_mi(
            &*inst.m1,
            &*inst.m2,
            &[ElementId(1), ElementId(0), ElementId(2)],
        )
        .unwrap();
        let (max, _) = brute_force_max_cardinality(&*inst.m1, &*inst.m2, 20).unwrap();
        assert_eq!((g.len(), max), (1, 2));
        assert_eq!(exact_mi(&*inst.m1, &*inst.m2).unwrap().len(), 2);
    }

    #[test]
    fn greedy_on_e1_in_every_order() {
        let inst = fixtures::e1().build().unwrap();
        for order in [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ] {
            let order: Vec<ElementId> = order.iter().map(|&i| ElementId(i)).collect();
            let g = greedy_mi(&*inst.m1, &*inst.m2, &order).unwrap();
            assert!(2 * g.len() >= 2);
        }
        let empty = fixtures::empty().build().unwrap();
        assert_eq!(
            greedy_mi(&*empty.m1, &*empty.m2, &[]).unwrap(),
            ElementSet::new()
        );
    }
}
