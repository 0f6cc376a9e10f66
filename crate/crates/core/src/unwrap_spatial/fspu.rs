use super::{assemble, effective_mask, turns, UnwrapResult};
use crate::error::Result;
use crate::formats::{FloatMap, Mask};
use crate::masking::connected_components_4;
use crate::phase_decode::wrap_angle;
use crate::scalar::Real;

/// Added to the second difference before inversion.
pub const FSPU_EPSILON: f64 = 1e-12;

/// Per-point reliability `1 / (D + eps)` where `D` combines the horizontal,
/// vertical and both diagonal wrapped second differences. A term whose two
/// neighbours are not both inside the mask contributes 0. Points outside the
/// mask get reliability 0.
pub fn second_difference_reliability<T: Real>(phi: &FloatMap<T>, mask: &Mask) -> Vec<T> {
    let (w, h) = (phi.width() as isize, phi.height() as isize);
    let v = phi.data();
    let inside =
        |r: isize, c: isize| r >= 0 && c >= 0 && r < h && c < w && mask.at((r * w + c) as usize);
    let at = |r: isize, c: isize| v[(r * w + c) as usize];
    let eps = T::lit(FSPU_EPSILON);
    let mut out = vec![T::zero(); v.len()];
    for r in 0..h {
        for c in 0..w {
            if !inside(r, c) {
                continue;
            }
            let centre = at(r, c);
            let mut d2 = T::zero();
            for (dr, dc) in [(0, 1), (1, 0), (1, 1), (1, -1)] {
                let (ar, ac) = (r - dr, c - dc);
                let (br, bc) = (r + dr, c + dc);
                if inside(ar, ac) && inside(br, bc) {
                    let term = wrap_angle(at(ar, ac) - centre) - wrap_angle(centre - at(br, bc));
                    d2 = d2 + term * term;
                }
            }
            out[(r * w + c) as usize] = T::one() / (d2.sqrt() + eps);
        }
    }
    out
}

/// Reliability-sorted unwrapping following a noncontinuous path.
///
/// Edges between 4-neighbours are sorted by the summed reliability of their
/// endpoints (ties by edge index) and merged union-find style; the smaller
/// group is shifted by the integer number of turns that makes the edge
/// consistent. Each region is finally anchored at its column-major midpoint.
pub fn fspu_unwrap<T: Real>(phi: &FloatMap<T>, mask: &Mask) -> Result<UnwrapResult<T>> {
    let mask = effective_mask(phi, mask)?;
    let (w, h) = (phi.width(), phi.height());
    let values = phi.data();
    let reliability = second_difference_reliability(phi, &mask);

    // Edge id 2*p + 0 joins p with its right neighbour, 2*p + 1 with the one below.
    let mut edges: Vec<(T, usize)> = Vec::new();
    for p in 0..w * h {
        if !mask.at(p) {
            continue;
        }
        if p % w + 1 < w && mask.at(p + 1) {
            edges.push((reliability[p] + reliability[p + 1], 2 * p));
        }
        if p / w + 1 < h && mask.at(p + w) {
            edges.push((reliability[p] + reliability[p + w], 2 * p + 1));
        }
    }
    edges.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite reliability")
            .then(a.1.cmp(&b.1))
    });

    let mut orders = vec![0i64; w * h];
    let mut group: Vec<usize> = (0..w * h).collect();
    let mut members: Vec<Vec<usize>> = (0..w * h)
        .map(|p| if mask.at(p) { vec![p] } else { Vec::new() })
        .collect();

    for &(_, id) in &edges {
        let p = id / 2;
        let q = if id % 2 == 0 { p + 1 } else { p + w };
        let (gp, gq) = (group[p], group[q]);
        if gp == gq {
            continue;
        }
        // Required: k_q = k_p - turns(phi_q - phi_p).
        let m = turns(values[q], values[p]);
        let (from, into, shift) = if members[gp].len() < members[gq].len() {
            (gp, gq, orders[q] + m - orders[p])
        } else {
            (gq, gp, orders[p] - m - orders[q])
        };
        let moved = std::mem::take(&mut members[from]);
        for &x in &moved {
            orders[x] += shift;
            group[x] = into;
        }
        members[into].extend(moved);
    }

    let regions = connected_components_4(&mask);
    let mut seeds = Vec::with_capacity(regions.region_count());
    for points in regions.column_major_points() {
        let seed = points[points.len() / 2];
        let base = orders[seed];
        for &x in &points {
            orders[x] -= base;
        }
        seeds.push(seed);
    }
    assemble(phi, mask, regions, orders, seeds)
}
