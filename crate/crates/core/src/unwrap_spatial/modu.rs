use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{assemble, effective_mask, turns, UnwrapResult};
use crate::error::Result;
use crate::formats::{check_dims, FloatMap, Mask};
use crate::masking::{connected_components_4, neighbors4};
use crate::scalar::Real;

/// Heap entry: higher quality first, then lower row-major index.
#[derive(Debug, Clone, Copy)]
struct Candidate<T> {
    quality: T,
    idx: usize,
}

impl<T: Real> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Candidate<T> {}

impl<T: Real> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Candidate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.quality
            .partial_cmp(&other.quality)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Quality-guided unwrapping driven by a modulation (or any) quality map.
///
/// Each region starts from its highest-quality point. The frontier point of
/// highest quality is unwrapped next, against its already unwrapped neighbour
/// of highest quality.
pub fn modu_sort_unwrap<T: Real>(
    phi: &FloatMap<T>,
    quality: &FloatMap<T>,
    mask: &Mask,
) -> Result<UnwrapResult<T>> {
    let mask = effective_mask(phi, mask)?;
    check_dims(phi.width(), phi.height(), quality.width(), quality.height())?;
    let (w, h) = (phi.width(), phi.height());
    let values = phi.data();
    let q = quality.data();
    let regions = connected_components_4(&mask);
    let mut orders = vec![0i64; w * h];
    let mut done = vec![false; w * h];
    let mut seeds = Vec::with_capacity(regions.region_count());
    let mut heap = BinaryHeap::new();

    let cand = |idx: usize| Candidate {
        quality: q[idx],
        idx,
    };
    for points in regions.column_major_points() {
        let seed = points
            .iter()
            .map(|&i| cand(i))
            .max()
            .expect("regions are non-empty")
            .idx;
        seeds.push(seed);
        done[seed] = true;
        heap.extend(neighbors4(seed, w, h).filter(|&n| mask.at(n)).map(cand));
        while let Some(Candidate { idx: p, .. }) = heap.pop() {
            if done[p] {
                continue;
            }
            let anchor = neighbors4(p, w, h)
                .filter(|&n| done[n])
                .map(cand)
                .max()
                .expect("frontier points touch an unwrapped neighbour")
                .idx;
            orders[p] = orders[anchor] - turns(values[p], values[anchor]);
            done[p] = true;
            heap.extend(
                neighbors4(p, w, h)
                    .filter(|&n| mask.at(n) && !done[n])
                    .map(cand),
            );
        }
    }
    assemble(phi, mask, regions, orders, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unwrap_spatial::flood_fill_unwrap;
    use std::f64::consts::PI;

    fn ramp(w: usize, h: usize) -> FloatMap<f64> {
        FloatMap::from_fn(w, h, |r, c| 0.9 * c as f64 + 0.4 * r as f64 - 5.0)
    }

    fn wrapped(m: &FloatMap<f64>) -> FloatMap<f64> {
        m.map(crate::phase_decode::wrap_angle)
    }

    #[test]
    fn seed_is_argmax_quality() {
        let phi = wrapped(&ramp(6, 5));
        let quality = FloatMap::from_fn(6, 5, |r, c| if (r, c) == (3, 2) { 9.0 } else { 1.0 });
        let out = modu_sort_unwrap(&phi, &quality, &Mask::filled(6, 5, true)).unwrap();
        assert_eq!(out.seeds, vec![(3, 2)]);
        assert_eq!(out.orders.get(3, 2), 0);
    }

    #[test]
    fn uniform_quality_matches_flood_fill_up_to_anchor() {
        let truth = ramp(16, 12);
        let phi = wrapped(&truth);
        let mask = Mask::filled(16, 12, true);
        let q = FloatMap::filled(16, 12, 1.0);
        let a = modu_sort_unwrap(&phi, &q, &mask).unwrap();
        let b = flood_fill_unwrap(&phi, &mask).unwrap();
        let shift = a.orders.at(0) - b.orders.at(0);
        for i in 0..phi.len() {
            assert_eq!(a.orders.at(i) - b.orders.at(i), shift);
        }
    }

    #[test]
    fn corrupted_low_quality_pixel_does_not_propagate() {
        let (w, h) = (20, 10);
        let truth = ramp(w, h);
        let bad = 5 * w + 10;
        let mut data = wrapped(&truth).data().to_vec();
        data[bad] = crate::phase_decode::wrap_angle(data[bad] + PI);
        let phi = FloatMap::new(w, h, data).unwrap();
        let quality = FloatMap::from_fn(w, h, |r, c| if r * w + c == bad { 0.01 } else { 1.0 });
        let out = modu_sort_unwrap(&phi, &quality, &Mask::filled(w, h, true)).unwrap();
        let (sr, sc) = out.seeds[0];
        let offset = truth.get(sr, sc) - out.phase.get(sr, sc);
        for i in 0..w * h {
            if i != bad {
                assert!(
                    (out.phase.at(i) + offset - truth.at(i)).abs() < 1e-9,
                    "point {i}"
                );
            }
        }
    }
}
