//! Element orders for greedy scans and streams: `natural`, `reverse`, `random:<seed>`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::set::ElementId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OrderSpec {
    #[default]
    Natural,
    Reverse,
    Random(u64),
}

impl OrderSpec {
    /// Permutes `elements`, which must already be ascending.
    pub fn apply(&self, elements: &[ElementId]) -> Vec<ElementId> {
        let mut v = elements.to_vec();
        match self {
            OrderSpec::Natural => {}
            OrderSpec::Reverse => v.reverse(),
            OrderSpec::Random(seed) => v.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed)),
        }
        v
    }
}

impl FromStr for OrderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" => Ok(OrderSpec::Natural),
            "reverse" => Ok(OrderSpec::Reverse),
            _ => s
                .strip_prefix("random:")
                .and_then(|seed| seed.parse().ok())
                .map(OrderSpec::Random)
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "order {s:?} is not natural, reverse or random:<seed>"
                    ))
                }),
        }
    }
}

impl fmt::Display for OrderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderSpec::Natural => write!(f, "natural"),
            OrderSpec::Reverse => write!(f, "reverse"),
            OrderSpec::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl Serialize for OrderSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_apply() {
        let ids: Vec<ElementId> = (0..6).map(ElementId).collect();
        assert_eq!("natural".parse::<OrderSpec>().unwrap().apply(&ids), ids);
        let rev = "reverse".parse::<OrderSpec>().unwrap().apply(&ids);
        assert_eq!(rev.first(), Some(&ElementId(5)));
        let r: OrderSpec = "random:9".parse().unwrap();
        assert_eq!(r.apply(&ids), r.apply(&ids));
        let mut sorted = r.apply(&ids);
        sorted.sort();
        assert_eq!(sorted, ids);
        assert_eq!(r.to_string(), "random:9");
        assert!(matches!(
            "random:x".parse::<OrderSpec>(),
            Err(Error::Parse(_))
        ));
    }
}
