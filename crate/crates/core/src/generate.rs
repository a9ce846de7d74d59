//! Seeded random instances. The same spec always yields the same instance.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{FamilySpec, InstanceSpec, WeightRange};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Uniform,
    Partition,
    Graphic,
    LinearGf2,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [
        FamilyKind::Uniform,
        FamilyKind::Partition,
        FamilyKind::Graphic,
        FamilyKind::LinearGf2,
    ];

    fn sample(self, n: usize, rng: &mut ChaCha8Rng) -> FamilySpec {
        match self {
            FamilyKind::Uniform => FamilySpec::Uniform {
                k: rng.gen_range(1..=n.max(1)),
            },
            FamilyKind::Partition => {
                let b = rng.gen_range(1..=n.max(1));
                let blocks = (0..n).map(|_| rng.gen_range(0..b as u32)).collect();
                let caps = (0..b).map(|_| rng.gen_range(1..=2)).collect();
                FamilySpec::Partition { blocks, caps }
            }
            FamilyKind::Graphic => {
                let vertices = rng.gen_range(2..=(n / 2 + 2).max(2));
                let edges = (0..n)
                    .map(|_| {
                        let u = rng.gen_range(0..vertices as u32);
                        let v = (u + rng.gen_range(1..vertices as u32)) % vertices as u32;
                        [u.min(v), u.max(v)]
                    })
                    .collect();
                FamilySpec::Graphic { vertices, edges }
            }
            FamilyKind::LinearGf2 => {
                let rows = rng.gen_range(1..=n.clamp(1, 5));
                let columns = (0..n)
                    .map(|_| {
                        (0..rows)
                            .map(|_| if rng.gen_bool(0.5) { '1' } else { '0' })
                            .collect()
                    })
                    .collect();
                FamilySpec::LinearGf2 { rows, columns }
            }
        }
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(FamilyKind::Uniform),
            "partition" => Ok(FamilyKind::Partition),
            "graphic" => Ok(FamilyKind::Graphic),
            "linear_gf2" | "linear" => Ok(FamilyKind::LinearGf2),
            _ => Err(Error::Parse(format!("unknown matroid family {s:?}"))),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Uniform => "uniform",
            FamilyKind::Partition => "partition",
            FamilyKind::Graphic => "graphic",
            FamilyKind::LinearGf2 => "linear_gf2",
        })
    }
}

/// `uniform:<W>` draws integers in `[1, W]`; `log-uniform:<R>` draws `p/1000` with
/// `log(w)` uniform on `[0, log R]`, so every ratio is at most `R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightDist {
    UniformInt { max: u64 },
    LogUniform { ratio: u64 },
}

impl WeightDist {
    fn sample(self, rng: &mut ChaCha8Rng) -> Rational {
        match self {
            WeightDist::UniformInt { max } => rational::int(rng.gen_range(1..=max) as i64),
            WeightDist::LogUniform { ratio } => {
                let x: f64 = (ratio as f64).powf(rng.gen::<f64>()) * 1000.0;
                let p = (x.round() as i64).clamp(1000, 1000 * ratio as i64);
                rational::ratio(p, 1000)
            }
        }
    }

    fn range(self) -> (Rational, Rational) {
        match self {
            WeightDist::UniformInt { max } => (rational::int(1), rational::int(max as i64)),
            WeightDist::LogUniform { ratio } => (rational::int(1), rational::int(ratio as i64)),
        }
    }
}

impl FromStr for WeightDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "weights {s:?} is not uniform:<W> or log-uniform:<R> with W, R >= 1"
            ))
        };
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let v: u64 = value.parse().map_err(|_| bad())?;
        if v == 0 {
            return Err(bad());
        }
        match kind {
            "uniform" => Ok(WeightDist::UniformInt { max: v }),
            "log-uniform" => Ok(WeightDist::LogUniform { ratio: v }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for WeightDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightDist::UniformInt { max } => write!(f, "uniform:{max}"),
            WeightDist::LogUniform { ratio } => write!(f, "log-uniform:{ratio}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family1: FamilyKind,
    pub family2: FamilyKind,
    pub n: usize,
    pub seed: u64,
    pub weights: WeightDist,
}

impl GeneratorSpec {
    /// Draws matroid parameters, then weights, from one ChaCha stream. The declared weight
    /// range of the distribution is attached to the instance.
    pub fn generate(&self) -> InstanceSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let matroid1 = self.family1.sample(self.n, &mut rng);
        let matroid2 = self.family2.sample(self.n, &mut rng);
        let weights = (0..self.n).map(|_| self.weights.sample(&mut rng)).collect();
        let (min, max) = self.weights.range();
        InstanceSpec {
            n: self.n,
            matroid1,
            matroid2,
            weights,
            weight_range: Some(WeightRange { min, max }),
        }
    }
}

/// `count` specs cycling through all 16 family pairings, with sizes in `[1, max_n]`.
pub fn corpus(count: usize, max_n: usize, weights: WeightDist, seed: u64) -> Vec<GeneratorSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| GeneratorSpec {
            family1: FamilyKind::ALL[k % 4],
            family2: FamilyKind::ALL[(k / 4) % 4],
            n: rng.gen_range(1..=max_n),
            seed: rng.gen(),
            weights,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_buildable() {
        let spec = GeneratorSpec {
            family1: FamilyKind::Graphic,
            family2: FamilyKind::Partition,
            n: 10,
            seed: 7,
            weights: WeightDist::UniformInt { max: 4 },
        };
        assert_eq!(spec.generate().to_json(), spec.generate().to_json());
        spec.generate().build().unwrap();
        for g in corpus(64, 8, WeightDist::LogUniform { ratio: 50 }, 3) {
            let inst = g.generate().build().unwrap();
            assert!(inst.aspect_ratio() <= rational::int(50));
        }
    }

    #[test]
    fn unit_weights_when_w_is_one() {
        let spec = GeneratorSpec {
            family1: FamilyKind::Uniform,
            family2: FamilyKind::LinearGf2,
            n: 6,
            seed: 1,
            weights: "uniform:1".parse().unwrap(),
        };
        assert!(spec
            .generate()
            .weights
            .iter()
            .all(|w| *w == rational::int(1)));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["uniform:4", "log-uniform:100"] {
            assert_eq!(s.parse::<WeightDist>().unwrap().to_string(), s);
        }
        assert!("uniform:0".parse::<WeightDist>().is_err());
        assert_eq!(
            "linear_gf2".parse::<FamilyKind>().unwrap().to_string(),
            "linear_gf2"
        );
    }
}
