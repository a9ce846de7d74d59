use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matroid::MatroidOracle;
use crate::rational::{self, Rational};
use crate::set::{ElementId, ElementSet};

/// A per-class solution `I'_j` with its weight interval `[lower, upper)`.
#[derive(Clone, Debug, Serialize)]
pub struct MergeClass {
    #[serde(with = "rational::serde_rational")]
    pub lower: Rational,
    #[serde(with = "rational::serde_rational")]
    pub upper: Rational,
    pub set: ElementSet,
}

/// Greedy union of per-class solutions, heaviest class first. Within a class elements go
/// by descending weight, then ascending id. An element is kept iff the merged set stays
/// independent in both matroids.
///
/// `classes` must be ordered by descending interval and each set must be common
/// independent with weights inside its interval.
pub fn greedy_merge(
    classes: &[MergeClass],
    m1: &dyn MatroidOracle,
    m2: &dyn MatroidOracle,
    weights: &[Rational],
) -> Result<ElementSet> {
    for pair in classes.windows(2) {
        if pair[1].upper > pair[0].lower {
            return Err(Error::Precondition(
                "classes are not in descending, disjoint order".into(),
            ));
        }
    }
    for c in classes {
        if let Some(e) = c
            .set
            .iter()
            .find(|e| weights[e.index()] < c.lower || weights[e.index()] >= c.upper)
        {
            return Err(Error::Precondition(format!(
                "element {e} lies outside its class interval"
            )));
        }
        if !(m1.is_independent(&c.set)? && m2.is_independent(&c.set)?) {
            return Err(Error::Precondition(
                "a class solution is not common independent".into(),
            ));
        }
    }
    let mut merged = ElementSet::new();
    for c in classes {
        let mut order: Vec<ElementId> = c.set.iter().collect();
        order.sort_by(|a, b| weights[b.index()].cmp(&weights[a.index()]).then(a.cmp(b)));
        for e in order {
            let candidate = merged.with(e);
            if m1.is_independent(&candidate)? && m2.is_independent(&candidate)? {
                merged = candidate;
            }
        }
    }
    Ok(merged)
}

/// `1 - 4 eps`, clamped at zero.
pub fn merge_factor(eps: &Rational) -> Rational {
    rational::nonneg(Rational::one() - Rational::from_integer(4.into()) * eps)
}

pub fn total_weight(set: &ElementSet, weights: &[Rational]) -> Rational {
    set.iter()
        .fold(Rational::zero(), |acc, e| acc + &weights[e.index()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{FamilySpec, InstanceSpec};
    use crate::rational::{int, ratio};

    #[test]
    fn single_class_is_returned_unchanged() {
        let inst = crate::instance::fixtures::e1().build().unwrap();
        let c = MergeClass {
            lower: int(1),
            upper: int(4),
            set: ElementSet::from_ids([0, 2]),
        };
        let merged = greedy_merge(&[c], &*inst.m1, &*inst.m2, &inst.weights).unwrap();
        assert_eq!(merged, ElementSet::from_ids([0, 2]));
    }

    #[test]
    fn heavy_element_spanning_light_one_wins() {
        // x (w=8) and y (w=1) are parallel in the first matroid.
        let inst = InstanceSpec {
            n: 2,
            matroid1: FamilySpec::Graphic {
                vertices: 2,
                edges: vec![[0, 1], [0, 1]],
            },
            matroid2: FamilySpec::Uniform { k: 2 },
            weights: vec![int(8), int(1)],
            weight_range: None,
        }
        .build()
        .unwrap();
        let classes = [
            MergeClass {
                lower: int(8),
                upper: int(9),
                set: ElementSet::from_ids([0]),
            },
            MergeClass {
                lower: int(1),
                upper: int(2),
                set: ElementSet::from_ids([1]),
            },
        ];
        let merged = greedy_merge(&classes, &*inst.m1, &*inst.m2, &inst.weights).unwrap();
        assert_eq!(merged, ElementSet::from_ids([0]));
        let eps = ratio(1, 10);
        assert!(int(8) >= merge_factor(&eps) * int(9));
    }

    #[test]
    fn independent_classes_merge_losslessly() {
        let inst = InstanceSpec {
            n: 3,
            matroid1: FamilySpec::Uniform { k: 3 },
            matroid2: FamilySpec::Uniform { k: 3 },
            weights: vec![int(100), int(5), int(1)],
            weight_range: None,
        }
        .build()
        .unwrap();
        let classes = [
            MergeClass {
                lower: int(100),
                upper: int(101),
                set: ElementSet::from_ids([0]),
            },
            MergeClass {
                lower: int(5),
                upper: int(6),
                set: ElementSet::from_ids([1]),
            },
            MergeClass {
                lower: int(1),
                upper: int(2),
                set: ElementSet::from_ids([2]),
            },
        ];
        let merged = greedy_merge(&classes, &*inst.m1, &*inst.m2, &inst.weights).unwrap();
        assert_eq!(merged, ElementSet::from_ids([0, 1, 2]));
    }

    #[test]
    fn rejects_misordered_classes() {
        let inst = crate::instance::fixtures::e1().build().unwrap();
        let classes = [
            MergeClass {
                lower: int(1),
                upper: int(2),
                set: ElementSet::from_ids([2]),
            },
            MergeClass {
                lower: int(3),
                upper: int(4),
                set: ElementSet::from_ids([0]),
            },
        ];
        assert!(matches!(
            greedy_merge(&classes, &*inst.m1, &*inst.m2, &inst.weights),
            Err(Error::Precondition(_))
        ));
    }
}
