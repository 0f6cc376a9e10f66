use std::collections::VecDeque;

use super::{assemble, effective_mask, turns, UnwrapResult};
use crate::error::{Error, Result};
use crate::formats::{FloatMap, Mask};
use crate::masking::{connected_components_4, neighbors4};
use crate::scalar::Real;

/// Seed of a region: the middle element (index `count / 2`) of its points
/// enumerated column by column, top to bottom. Input order is irrelevant.
pub fn select_seed(points: &[(usize, usize)]) -> Result<(usize, usize)> {
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|&(row, col)| (col, row));
    Ok(sorted[sorted.len() / 2])
}

/// Breadth-first unwrapping of each 4-connected region of `mask`.
///
/// Neighbours are visited up, left, right, down from a FIFO frontier; a point
/// reached from `q` gets `Phi(p) = Phi(q) + wrap(phi(p) - phi(q))`.
pub fn flood_fill_unwrap<T: Real>(phi: &FloatMap<T>, mask: &Mask) -> Result<UnwrapResult<T>> {
    let mask = effective_mask(phi, mask)?;
    let (w, h) = (phi.width(), phi.height());
    let values = phi.data();
    let regions = connected_components_4(&mask);
    let mut orders = vec![0i64; w * h];
    let mut visited = vec![false; w * h];
    let mut seeds = Vec::with_capacity(regions.region_count());
    let mut queue = VecDeque::new();

    for points in regions.column_major_points() {
        // Already column-major, so the middle element is the seed.
        let seed = points[points.len() / 2];
        seeds.push(seed);
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for q in neighbors4(p, w, h) {
                if mask.at(q) && !visited[q] {
                    visited[q] = true;
                    orders[q] = orders[p] - turns(values[q], values[p]);
                    queue.push_back(q);
                }
            }
        }
    }
    assemble(phi, mask, regions, orders, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn seed_rule() {
        let five: Vec<_> = (0..5).map(|r| (r, 0)).collect();
        assert_eq!(select_seed(&five).unwrap(), (2, 0));
        let four = [(0, 0), (1, 0), (0, 1), (1, 1)];
        assert_eq!(select_seed(&four).unwrap(), (0, 1));
        assert_eq!(select_seed(&[(3, 4)]).unwrap(), (3, 4));
        assert_eq!(select_seed(&[]).unwrap_err(), Error::EmptyRegion);
        // Order of the input does not matter.
        assert_eq!(
            select_seed(&[(1, 1), (0, 1), (1, 0), (0, 0)]).unwrap(),
            (0, 1)
        );
    }

    #[test]
    fn three_point_row() {
        let phi = FloatMap::new(3, 1, vec![3.0f64, -3.0, 2.9]).unwrap();
        let out = flood_fill_unwrap(&phi, &Mask::filled(3, 1, true)).unwrap();
        assert_eq!(out.seeds, vec![(0, 1)]);
        let want = [-3.0 - (2.0 * PI - 6.0), -3.0, -3.0 - (2.0 * PI - 5.9)];
        for (g, w) in out.phase.data().iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
        assert!((out.phase.at(0) + 3.28319).abs() < 1e-5);
        assert!((out.phase.at(2) + 3.38319).abs() < 1e-5);
        assert_eq!(out.orders.orders(), &[-1, 0, -1]);
    }

    #[test]
    fn continuous_input_is_unchanged() {
        let phi = FloatMap::from_fn(6, 4, |r, c| 0.3 * c as f64 - 0.2 * r as f64);
        let out = flood_fill_unwrap(&phi, &Mask::filled(6, 4, true)).unwrap();
        assert_eq!(out.phase.data(), phi.data());
    }

    #[test]
    fn empty_mask_gives_empty_result() {
        let phi = FloatMap::filled(4, 4, 1.0f64);
        let out = flood_fill_unwrap(&phi, &Mask::filled(4, 4, false)).unwrap();
        assert_eq!(out.regions.region_count(), 0);
        assert!(out.seeds.is_empty());
        assert_eq!(out.phase.valid_count(), 0);
    }

    #[test]
    fn regions_get_independent_seeds() {
        let mask = Mask::from_fn(5, 2, |_, c| c != 2);
        let phi = FloatMap::from_fn(5, 2, |_, c| c as f64);
        let out = flood_fill_unwrap(&phi, &mask).unwrap();
        assert_eq!(out.regions.region_count(), 2);
        assert_eq!(out.seeds, vec![(0, 1), (0, 4)]);
        for &(r, c) in &out.seeds {
            assert_eq!(out.orders.get(r, c), 0);
            assert_eq!(out.phase.get(r, c), phi.get(r, c));
        }
    }

    #[test]
    fn rejects_mismatched_mask() {
        let phi = FloatMap::filled(4, 4, 1.0f64);
        assert!(flood_fill_unwrap(&phi, &Mask::filled(3, 4, true)).is_err());
    }
}
