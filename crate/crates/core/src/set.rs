use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense element index in `[0, n)`. Views derived from an instance keep the original ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

impl ElementId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const SMALL_LIMIT: u32 = 128;

/// Set of element ids.
///
/// Canonical form: `Small` iff every member is below 128, otherwise `Large` with a
/// strictly increasing id vector. Equality and hashing rely on this.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum ElementSet {
    Small(u128),
    Large(Vec<u32>),
}

impl Default for ElementSet {
    fn default() -> Self {
        ElementSet::Small(0)
    }
}

impl ElementSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// `{0, 1, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        if n <= SMALL_LIMIT as usize {
            if n == 128 {
                ElementSet::Small(u128::MAX)
            } else {
                ElementSet::Small((1u128 << n) - 1)
            }
        } else {
            ElementSet::Large((0..n as u32).collect())
        }
    }

    pub fn singleton(e: ElementId) -> Self {
        let mut s = Self::new();
        s.insert(e);
        s
    }

    pub fn from_ids<I: IntoIterator<Item = u32>>(ids: I) -> Self {
        let mut v: Vec<u32> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self::from_sorted(v)
    }

    fn from_sorted(v: Vec<u32>) -> Self {
        if v.last().is_none_or(|&m| m < SMALL_LIMIT) {
            ElementSet::Small(v.iter().fold(0u128, |acc, &x| acc | (1u128 << x)))
        } else {
            ElementSet::Large(v)
        }
    }

    pub fn from_bits(bits: u128) -> Self {
        ElementSet::Small(bits)
    }

    /// Bit representation when every member is below 128.
    pub fn as_bits(&self) -> Option<u128> {
        match self {
            ElementSet::Small(b) => Some(*b),
            ElementSet::Large(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ElementSet::Small(b) => b.count_ones() as usize,
            ElementSet::Large(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, e: ElementId) -> bool {
        match self {
            ElementSet::Small(b) => e.0 < SMALL_LIMIT && (b >> e.0) & 1 == 1,
            ElementSet::Large(v) => v.binary_search(&e.0).is_ok(),
        }
    }

    pub fn insert(&mut self, e: ElementId) -> bool {
        match self {
            ElementSet::Small(b) if e.0 < SMALL_LIMIT => {
                let had = (*b >> e.0) & 1 == 1;
                *b |= 1u128 << e.0;
                !had
            }
            ElementSet::Small(_) => {
                let mut v = self.to_vec();
                v.push(e.0);
                *self = ElementSet::Large(v);
                true
            }
            ElementSet::Large(v) => match v.binary_search(&e.0) {
                Ok(_) => false,
                Err(pos) => {
                    v.insert(pos, e.0);
                    true
                }
            },
        }
    }

    pub fn remove(&mut self, e: ElementId) -> bool {
        match self {
            ElementSet::Small(b) => {
                if e.0 >= SMALL_LIMIT {
                    return false;
                }
                let had = (*b >> e.0) & 1 == 1;
                *b &= !(1u128 << e.0);
                had
            }
            ElementSet::Large(v) => match v.binary_search(&e.0) {
                Ok(pos) => {
                    v.remove(pos);
                    if v.last().is_none_or(|&m| m < SMALL_LIMIT) {
                        *self = Self::from_sorted(std::mem::take(v));
                    }
                    true
                }
                Err(_) => false,
            },
        }
    }

    pub fn with(&self, e: ElementId) -> Self {
        let mut s = self.clone();
        s.insert(e);
        s
    }

    pub fn without(&self, e: ElementId) -> Self {
        let mut s = self.clone();
        s.remove(e);
        s
    }

    /// Members in ascending order.
    pub fn iter(&self) -> Iter<'_> {
        match self {
            ElementSet::Small(b) => Iter::Small(*b),
            ElementSet::Large(v) => Iter::Large(v.iter()),
        }
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().map(|e| e.0).collect()
    }

    pub fn max_id(&self) -> Option<ElementId> {
        match self {
            ElementSet::Small(0) => None,
            ElementSet::Small(b) => Some(ElementId(127 - b.leading_zeros())),
            ElementSet::Large(v) => v.last().map(|&x| ElementId(x)),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        match (self, other) {
            (ElementSet::Small(a), ElementSet::Small(b)) => ElementSet::Small(a | b),
            _ => Self::from_ids(self.iter().chain(other.iter()).map(|e| e.0)),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        match (self, other) {
            (ElementSet::Small(a), ElementSet::Small(b)) => ElementSet::Small(a & b),
            _ => Self::from_sorted(
                self.iter()
                    .filter(|e| other.contains(*e))
                    .map(|e| e.0)
                    .collect(),
            ),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        match (self, other) {
            (ElementSet::Small(a), ElementSet::Small(b)) => ElementSet::Small(a & !b),
            _ => Self::from_sorted(
                self.iter()
                    .filter(|e| !other.contains(*e))
                    .map(|e| e.0)
                    .collect(),
            ),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        match (self, other) {
            (ElementSet::Small(a), ElementSet::Small(b)) => a & !b == 0,
            _ => self.iter().all(|e| other.contains(e)),
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        match (self, other) {
            (ElementSet::Small(a), ElementSet::Small(b)) => a & b == 0,
            _ => self.iter().all(|e| !other.contains(e)),
        }
    }

    /// First member not below `n`, if any.
    pub fn first_outside(&self, n: usize) -> Option<ElementId> {
        self.max_id().filter(|m| m.index() >= n).map(|_| {
            self.iter()
                .find(|e| e.index() >= n)
                .expect("max is outside")
        })
    }
}

#[derive(Clone)]
pub enum Iter<'a> {
    Small(u128),
    Large(std::slice::Iter<'a, u32>),
}

impl Iterator for Iter<'_> {
    type Item = ElementId;

    fn next(&mut self) -> Option<ElementId> {
        match self {
            Iter::Small(b) => {
                if *b == 0 {
                    return None;
                }
                let i = b.trailing_zeros();
                *b &= *b - 1;
                Some(ElementId(i))
            }
            Iter::Large(it) => it.next().map(|&x| ElementId(x)),
        }
    }
}

impl<'a> IntoIterator for &'a ElementSet {
    type Item = ElementId;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

impl FromIterator<ElementId> for ElementSet {
    fn from_iter<I: IntoIterator<Item = ElementId>>(iter: I) -> Self {
        Self::from_ids(iter.into_iter().map(|e| e.0))
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|e| e.0)).finish()
    }
}

impl Serialize for ElementSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_vec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ElementSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Vec::<u32>::deserialize(d).map(Self::from_ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form_switches_at_128() {
        let mut s = ElementSet::from_ids([3, 200]);
        assert!(matches!(s, ElementSet::Large(_)));
        s.remove(ElementId(200));
        assert_eq!(s, ElementSet::from_ids([3]));
        assert!(matches!(s, ElementSet::Small(_)));
        assert_eq!(ElementSet::full(128).len(), 128);
        assert_eq!(ElementSet::full(130).max_id(), Some(ElementId(129)));
    }

    proptest! {
        #[test]
        fn set_algebra_matches_btreeset(a in proptest::collection::btree_set(0u32..300, 0..20),
                                        b in proptest::collection::btree_set(0u32..300, 0..20)) {
            let sa = ElementSet::from_ids(a.iter().copied());
            let sb = ElementSet::from_ids(b.iter().copied());
            let u: Vec<u32> = a.union(&b).copied().collect();
            let i: Vec<u32> = a.intersection(&b).copied().collect();
            let d: Vec<u32> = a.difference(&b).copied().collect();
            prop_assert_eq!(sa.union(&sb), ElementSet::from_ids(u.clone()));
            prop_assert_eq!(sa.union(&sb).to_vec(), u);
            prop_assert_eq!(sa.intersection(&sb).to_vec(), i);
            prop_assert_eq!(sa.difference(&sb).to_vec(), d);
            prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
            prop_assert_eq!(sa.is_disjoint(&sb), a.is_disjoint(&b));
            prop_assert_eq!(sa.len(), a.len());
        }
    }
}
