//! Benchmark matrix: generated instances × `eps` × solvers, one row per cell.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generate::{FamilyKind, GeneratorSpec, WeightDist};
use crate::order::OrderSpec;
use crate::rational::{self, Rational};
use crate::reduction::{brute_force_opt, spread_decompose};
use crate::solvers::{solver_by_name, weighted_mi_reduce};

/// Rows carry a brute-force reference up to this many elements.
pub const DEFAULT_REFERENCE_MAX_N: usize = 12;

#[derive(Clone, Debug)]
pub struct BenchMatrix {
    pub pairs: Vec<(FamilyKind, FamilyKind)>,
    pub sizes: Vec<usize>,
    pub weights: Vec<WeightDist>,
    /// Instances per (pair, size, weights) cell; instance `k` uses seed `seed + k` in every
    /// cell, so cells differing only in the weight distribution share their matroids.
    pub instances: usize,
    pub seed: u64,
    pub epsilons: Vec<Rational>,
    pub solvers: Vec<String>,
    pub reference_max_n: usize,
}

/// One CSV row. Field order is the column order.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub family1: String,
    pub family2: String,
    pub n: usize,
    pub weights: String,
    /// `W` for integer weights, `R` for log-uniform ones.
    pub weight_param: u64,
    pub epsilon: String,
    pub solver: String,
    pub output_weight: String,
    /// Brute-force optimum; empty above the reference size.
    pub reference_weight: Option<String>,
    pub ratio: Option<f64>,
    pub composed_bound: f64,
    pub independence_calls: u64,
    pub rank_calls: u64,
    pub unfolded_calls: u64,
    pub classes: usize,
    pub max_class_weight: u64,
    pub wall_ms: f64,
}

fn weight_param(w: WeightDist) -> u64 {
    match w {
        WeightDist::UniformInt { max } => max,
        WeightDist::LogUniform { ratio } => ratio,
    }
}

pub fn run_bench(m: &BenchMatrix) -> Result<Vec<BenchRow>> {
    let solvers = m
        .solvers
        .iter()
        .map(|s| solver_by_name(s, OrderSpec::Natural))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &(f1, f2) in &m.pairs {
        for &n in &m.sizes {
            for &weights in &m.weights {
                for k in 0..m.instances {
                    let g = GeneratorSpec {
                        family1: f1,
                        family2: f2,
                        n,
                        seed: m.seed + k as u64,
                        weights,
                    };
                    let spec = g.generate();
                    let id = format!("{f1}-{f2}-n{n}-{weights}-s{}", g.seed);
                    let reference = if n <= m.reference_max_n {
                        Some(brute_force_opt(&spec.build()?)?.0)
                    } else {
                        None
                    };
                    for eps in &m.epsilons {
                        for solver in &solvers {
                            let inst = spec.build()?;
                            let start = Instant::now();
                            let r = weighted_mi_reduce(&inst, eps, &**solver)?;
                            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                            let ratio = match &reference {
                                Some(opt) if !opt.is_zero() => {
                                    let q = &r.weight / opt;
                                    if q > Rational::one() {
                                        return Err(Error::ContractViolation(format!(
                                            "{id}: weight exceeds the optimum"
                                        )));
                                    }
                                    Some(rational::to_f64(&q))
                                }
                                Some(_) => Some(1.0),
                                None => None,
                            };
                            let classes = r.indices.iter().flat_map(|ix| &ix.classes);
                            rows.push(BenchRow {
                                instance_id: id.clone(),
                                family1: f1.to_string(),
                                family2: f2.to_string(),
                                n,
                                weights: weights.to_string(),
                                weight_param: weight_param(weights),
                                epsilon: rational::format(eps),
                                solver: solver.name(),
                                output_weight: rational::format(&r.weight),
                                reference_weight: reference.as_ref().map(rational::format),
                                ratio,
                                composed_bound: r.composed_bound_f64,
                                independence_calls: r.ledger.independence_calls,
                                rank_calls: r.ledger.rank_calls,
                                unfolded_calls: r.stages.unfolded,
                                classes: classes.clone().count(),
                                max_class_weight: classes
                                    .map(|c| c.max_integer_weight)
                                    .max()
                                    .unwrap_or(0),
                                wall_ms,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Mean independence calls for one `(n, eps, solver, W)` group.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthPoint {
    pub n: usize,
    pub epsilon: String,
    pub solver: String,
    pub weight_param: u64,
    pub mean_independence_calls: f64,
    /// Relative to the smallest `W` of the group.
    pub growth: f64,
}

/// Spread geometry of the matrix's instances at one `eps`.
#[derive(Clone, Debug, Serialize)]
pub struct SpreadPoint {
    pub epsilon: String,
    pub beta: u64,
    pub mean_classes: f64,
    /// Largest number of non-empty classes under a single index `i`.
    pub max_classes_per_index: usize,
    pub max_class_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchSummary {
    pub growth: Vec<GrowthPoint>,
    pub spread: Vec<SpreadPoint>,
}

pub fn summarize(m: &BenchMatrix, rows: &[BenchRow]) -> Result<BenchSummary> {
    let mut groups: BTreeMap<(usize, String, String, u64), (f64, usize)> = BTreeMap::new();
    for r in rows {
        let slot = groups
            .entry((r.n, r.epsilon.clone(), r.solver.clone(), r.weight_param))
            .or_default();
        slot.0 += r.independence_calls as f64;
        slot.1 += 1;
    }
    let mut growth: Vec<GrowthPoint> = Vec::new();
    for ((n, epsilon, solver, w), (sum, count)) in groups {
        let mean = sum / count as f64;
        let base = growth
            .iter()
            .find(|g| g.n == n && g.epsilon == epsilon && g.solver == solver)
            .map_or(mean, |g| g.mean_independence_calls);
        let growth_factor = if base > 0.0 { mean / base } else { 1.0 };
        growth.push(GrowthPoint {
            n,
            epsilon,
            solver,
            weight_param: w,
            mean_independence_calls: mean,
            growth: growth_factor,
        });
    }

    let mut spread = Vec::new();
    for eps in &m.epsilons {
        let mut point = SpreadPoint {
            epsilon: rational::format(eps),
            beta: rational::ceil_inverse(eps),
            mean_classes: 0.0,
            max_classes_per_index: 0,
            max_class_ratio: 1.0,
        };
        let mut count = 0;
        for &(f1, f2) in &m.pairs {
            for &n in &m.sizes {
                for &weights in &m.weights {
                    for k in 0..m.instances {
                        let g = GeneratorSpec {
                            family1: f1,
                            family2: f2,
                            n,
                            seed: m.seed + k as u64,
                            weights,
                        };
                        let inst = g.generate().build()?;
                        let d = spread_decompose(&inst, eps)?;
                        point.mean_classes += d.class_count() as f64;
                        point.max_classes_per_index = point.max_classes_per_index.max(
                            d.indices
                                .iter()
                                .map(|ix| ix.classes.len())
                                .max()
                                .unwrap_or(0),
                        );
                        point.max_class_ratio = point
                            .max_class_ratio
                            .max(rational::to_f64(&d.max_class_ratio(&inst)));
                        count += 1;
                    }
                }
            }
        }
        if count > 0 {
            point.mean_classes /= count as f64;
        }
        spread.push(point);
    }
    Ok(BenchSummary { growth, spread })
}

impl fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "independence calls versus W (mean per instance)")?;
        for g in &self.growth {
            writeln!(
                f,
                "  n={} eps={} solver={} W={}: {:.1} calls, x{:.2} vs smallest W",
                g.n, g.epsilon, g.solver, g.weight_param, g.mean_independence_calls, g.growth
            )?;
        }
        writeln!(f, "spread geometry")?;
        for s in &self.spread {
            writeln!(
                f,
                "  eps={} beta={} mean classes={:.2} max classes per i={} max class ratio={:.2}",
                s.epsilon, s.beta, s.mean_classes, s.max_classes_per_index, s.max_class_ratio
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn matrix(weights: Vec<WeightDist>, epsilons: Vec<Rational>) -> BenchMatrix {
        BenchMatrix {
            pairs: vec![(FamilyKind::Graphic, FamilyKind::Partition)],
            sizes: vec![8],
            weights,
            instances: 4,
            seed: 5,
            epsilons,
            solvers: vec!["exact".into()],
            reference_max_n: DEFAULT_REFERENCE_MAX_N,
        }
    }

    #[test]
    fn single_cell_single_row() {
        let mut m = matrix(vec![WeightDist::UniformInt { max: 4 }], vec![ratio(1, 4)]);
        m.instances = 1;
        let rows = run_bench(&m).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].ratio.unwrap() <= 1.0);
    }

    #[test]
    fn calls_grow_with_w() {
        let ws = [1, 2, 4, 8]
            .map(|max| WeightDist::UniformInt { max })
            .to_vec();
        let m = matrix(ws, vec![ratio(1, 4)]);
        let s = summarize(&m, &run_bench(&m).unwrap()).unwrap();
        let calls: Vec<f64> = s.growth.iter().map(|g| g.mean_independence_calls).collect();
        assert!(calls.windows(2).all(|p| p[0] <= p[1]), "{calls:?}");
    }

    #[test]
    fn spread_geometry_as_eps_shrinks() {
        let m = matrix(
            vec![WeightDist::LogUniform { ratio: 50 }],
            vec![ratio(1, 2), ratio(1, 4)],
        );
        let s = summarize(&m, &run_bench(&m).unwrap()).unwrap();
        assert!(s.spread[0].beta < s.spread[1].beta);
        assert!(s.spread[0].max_class_ratio <= s.spread[1].max_class_ratio);
    }
}
