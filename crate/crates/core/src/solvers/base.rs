use num_traits::Zero;

use crate::error::Result;
use crate::matroid::MatroidOracle;
use crate::set::{ElementId, ElementSet};

/// Greedy maximum-weight independent subset of `candidates`, restricted to positive
/// weights. Order: descending weight, then members of `previous` first, then ascending id.
pub fn max_weight_base<T: Ord + Zero>(
    m: &dyn MatroidOracle,
    weights: &[T],
    candidates: &ElementSet,
    previous: Option<&ElementSet>,
) -> Result<ElementSet> {
    let zero = T::zero();
    let mut order: Vec<ElementId> = candidates
        .iter()
        .filter(|e| weights[e.index()] > zero)
        .collect();
    let in_prev = |e: &ElementId| previous.is_some_and(|p| p.contains(*e));
    order.sort_by(|a, b| {
        weights[b.index()]
            .cmp(&weights[a.index()])
            .then_with(|| in_prev(b).cmp(&in_prev(a)))
            .then(a.cmp(b))
    });
    let mut base = ElementSet::new();
    for e in order {
        let candidate = base.with(e);
        if m.is_independent(&candidate)? {
            base = candidate;
        }
    }
    Ok(base)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::matroid::{GraphicMatroid, UniformMatroid};

    #[test]
    fn examples() {
        let u = UniformMatroid::new(3, 2, Arc::default());
        assert_eq!(
            max_weight_base(&u, &[5, 3, 1], &ElementSet::full(3), None).unwrap(),
            ElementSet::from_ids([0, 1])
        );
        assert_eq!(
            max_weight_base(&u, &[0, 0, 0], &ElementSet::full(3), None).unwrap(),
            ElementSet::new()
        );
        let g = GraphicMatroid::new(3, vec![(0, 1), (1, 2), (0, 2)], Arc::default()).unwrap();
        assert_eq!(
            max_weight_base(&g, &[3, 2, 1], &ElementSet::full(3), None).unwrap(),
            ElementSet::from_ids([0, 1])
        );
    }

    #[test]
    fn ties_prefer_previous_members() {
        let u = UniformMatroid::new(3, 1, Arc::default());
        let prev = ElementSet::from_ids([2]);
        assert_eq!(
            max_weight_base(&u, &[4, 4, 4], &ElementSet::full(3), Some(&prev)).unwrap(),
            prev
        );
        assert_eq!(
            max_weight_base(&u, &[4, 4, 4], &ElementSet::full(3), None).unwrap(),
            ElementSet::from_ids([0])
        );
    }
}
