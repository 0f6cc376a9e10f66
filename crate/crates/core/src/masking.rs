//! Validity masks: modulation thresholding, 4-connected components, small
//! region removal, masks from class labels, and a rule-based classifier that
//! stands in when no learned classifier output is available.

use std::collections::VecDeque;

use crate::error::Result;
use crate::formats::{check_dims, Class, FloatMap, LabelMap, Mask, PmiImage};
use crate::phase_decode::wrap_angle;
use crate::scalar::Real;

/// Per-illumination modulation thresholds used for the quality-guided
/// baselines on the five-illumination test set.
pub const ILLUMINATION_THRESHOLD_PRESETS: [f64; 5] = [6.0, 7.0, 8.0, 9.0, 10.0];

/// Default modulation threshold separating background from object points.
pub const DEFAULT_MODULATION_THRESHOLD: f64 = 2.0;

/// Default minimum region size as a fraction of all map points.
pub const DEFAULT_MIN_REGION_FRACTION: f64 = 0.01;

/// Maximal 4-connected regions of a mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionDecomposition {
    width: usize,
    height: usize,
    ids: Vec<u32>,
    sizes: Vec<usize>,
}

impl RegionDecomposition {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of regions `R`; ids run `1..=R`.
    pub fn region_count(&self) -> usize {
        self.sizes.len()
    }

    /// Region id of a point, 0 when outside every region.
    #[inline]
    pub fn id_at(&self, idx: usize) -> u32 {
        self.ids[idx]
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Sizes indexed by `id - 1`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Point indices of every region, each enumerated column by column,
    /// top to bottom. Entry `r` belongs to id `r + 1`.
    pub fn column_major_points(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for col in 0..self.width {
            for row in 0..self.height {
                let idx = row * self.width + col;
                let id = self.ids[idx];
                if id > 0 {
                    out[id as usize - 1].push(idx);
                }
            }
        }
        out
    }

    /// The union of all regions.
    pub fn mask(&self) -> Mask {
        Mask::new(
            self.width,
            self.height,
            self.ids.iter().map(|&id| id > 0).collect(),
        )
        .expect("length matches")
    }
}

/// Valid where `modulation > threshold`.
pub fn threshold_mask<T: Real>(modulation: &FloatMap<T>, threshold: T) -> Mask {
    Mask::new(
        modulation.width(),
        modulation.height(),
        modulation
            .data()
            .iter()
            .enumerate()
            .map(|(i, &m)| modulation.is_valid(i) && m > threshold)
            .collect(),
    )
    .expect("length matches")
}

/// 4-neighbours of `idx` in the fixed order up, left, right, down.
#[inline]
pub(crate) fn neighbors4(idx: usize, width: usize, height: usize) -> impl Iterator<Item = usize> {
    let row = idx / width;
    let col = idx % width;
    [
        (row > 0).then(|| idx - width),
        (col > 0).then(|| idx - 1),
        (col + 1 < width).then(|| idx + 1),
        (row + 1 < height).then(|| idx + width),
    ]
    .into_iter()
    .flatten()
}

/// Labels maximal 4-connected `true` regions `1..=R` in order of first
/// encounter in a row-major scan.
pub fn connected_components_4(mask: &Mask) -> RegionDecomposition {
    let (w, h) = (mask.width(), mask.height());
    let mut ids = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.at(start) || ids[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        ids[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(p) = queue.pop_front() {
            size += 1;
            for q in neighbors4(p, w, h) {
                if mask.at(q) && ids[q] == 0 {
                    ids[q] = id;
                    queue.push_back(q);
                }
            }
        }
        sizes.push(size);
    }
    RegionDecomposition {
        width: w,
        height: h,
        ids,
        sizes,
    }
}

/// Drops 4-connected regions with fewer than `min_fraction * width * height`
/// points.
pub fn remove_small_regions(mask: &Mask, min_fraction: f64) -> Mask {
    let bound = min_fraction * mask.len() as f64;
    let regions = connected_components_4(mask);
    let keep: Vec<bool> = regions.sizes.iter().map(|&s| (s as f64) >= bound).collect();
    Mask::new(
        mask.width(),
        mask.height(),
        regions
            .ids
            .iter()
            .map(|&id| id > 0 && keep[id as usize - 1])
            .collect(),
    )
    .expect("length matches")
}

/// Valid exactly where the label is [`Class::Reliable`].
pub fn mask_from_labels(labels: &LabelMap) -> Mask {
    Mask::new(
        labels.width(),
        labels.height(),
        labels
            .labels()
            .iter()
            .map(|&c| c == Class::Reliable)
            .collect(),
    )
    .expect("length matches")
}

/// Tuning constants of [`heuristic_classify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicParams {
    /// Normalized modulation below which a point is unreliable.
    pub q_low: f64,
    /// Largest tolerated wrapped second difference of phase, radians.
    pub tau_d: f64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        Self {
            q_low: 0.08,
            tau_d: 1.0,
        }
    }
}

/// Largest magnitude of the horizontal and vertical wrapped second
/// differences of `phi` at `idx`. A direction contributes only when both of
/// its neighbours are valid.
pub(crate) fn max_second_difference<T: Real>(
    phi: &[T],
    valid: &Mask,
    idx: usize,
    width: usize,
    height: usize,
) -> T {
    let row = idx / width;
    let col = idx % width;
    let c = phi[idx];
    let mut best = T::zero();
    if col > 0 && col + 1 < width && valid.at(idx - 1) && valid.at(idx + 1) {
        let d = wrap_angle(phi[idx - 1] - c) - wrap_angle(c - phi[idx + 1]);
        best = best.max(d.abs());
    }
    if row > 0 && row + 1 < height && valid.at(idx - width) && valid.at(idx + width) {
        let d = wrap_angle(phi[idx - width] - c) - wrap_angle(c - phi[idx + width]);
        best = best.max(d.abs());
    }
    best
}

/// Rule-based three-class labelling of a PMI image.
///
/// Invalid points get class 0. A valid point is unreliable when its normalized
/// modulation is below `q_low` or the wrapped second difference of the phase
/// exceeds `tau_d`; everything else is reliable.
pub fn heuristic_classify<T: Real>(
    pmi: &PmiImage<T>,
    validity: &Mask,
    params: &HeuristicParams,
) -> Result<LabelMap> {
    let (w, h) = (pmi.width(), pmi.height());
    check_dims(w, h, validity.width(), validity.height())?;
    let phi: Vec<T> = pmi
        .phase()
        .data()
        .iter()
        .map(|&p| p * T::two_pi() - T::PI())
        .collect();
    let q_low = T::lit(params.q_low);
    let tau = T::lit(params.tau_d);
    let labels = (0..w * h)
        .map(|i| {
            if !validity.at(i) {
                Class::Background
            } else if pmi.modulation().at(i) < q_low
                || max_second_difference(&phi, validity, i, w, h) > tau
            {
                Class::Unreliable
            } else {
                Class::Reliable
            }
        })
        .collect();
    LabelMap::new(w, h, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, s: &str) -> Mask {
        let bits: Vec<bool> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| c == '#')
            .collect();
        Mask::new(w, h, bits).unwrap()
    }

    #[test]
    fn threshold_is_strict() {
        let m = FloatMap::new(3, 1, vec![2.0f64, 5.0, 1.0]).unwrap();
        let t = threshold_mask(&m, 2.0);
        assert_eq!(t.bits(), &[false, true, false]);
    }

    #[test]
    fn threshold_respects_existing_validity() {
        let m = FloatMap::new(2, 1, vec![5.0f64, 5.0])
            .unwrap()
            .with_validity(Mask::new(2, 1, vec![true, false]).unwrap())
            .unwrap();
        assert_eq!(threshold_mask(&m, 2.0).bits(), &[true, false]);
    }

    #[test]
    fn components_basic_cases() {
        assert_eq!(
            connected_components_4(&Mask::filled(4, 4, false)).region_count(),
            0
        );

        let diag = mask(2, 2, "#. .#");
        let r = connected_components_4(&diag);
        assert_eq!(r.region_count(), 2);
        assert_eq!(r.sizes(), &[1, 1]);

        let plus = mask(3, 3, ".#. ### .#.");
        let r = connected_components_4(&plus);
        assert_eq!(r.region_count(), 1);
        assert_eq!(r.sizes(), &[5]);
    }

    #[test]
    fn components_numbered_in_scan_order() {
        let m = mask(5, 3, "..#.# #.... ##..#");
        let r = connected_components_4(&m);
        assert_eq!(r.region_count(), 4);
        assert_eq!(r.id_at(2), 1);
        assert_eq!(r.id_at(4), 2);
        assert_eq!(r.id_at(5), 3);
        assert_eq!(r.id_at(11), 3);
        assert_eq!(r.id_at(14), 4);
        assert_eq!(r.sizes(), &[1, 1, 3, 1]);
    }

    #[test]
    fn column_major_points_order() {
        let m = mask(3, 2, "### #..");
        let pts = connected_components_4(&m).column_major_points();
        assert_eq!(pts, vec![vec![0, 3, 1, 2]]);
    }

    #[test]
    fn small_regions_boundary() {
        // 100x100 map; bound is 0.01 * 10_000 = 100 points.
        let m = Mask::from_fn(100, 100, |r, c| (r == 0 && c < 99) || (r == 50 && c < 100));
        let out = remove_small_regions(&m, 0.01);
        assert_eq!(out.count(), 100);
        assert!(out.get(50, 0));
        assert!(!out.get(0, 0));

        assert_eq!(remove_small_regions(&m, 0.0), m);
        let full = Mask::filled(10, 10, true);
        assert_eq!(remove_small_regions(&full, 1.0), full);
    }

    #[test]
    fn labels_to_mask() {
        let l = LabelMap::new(
            3,
            1,
            vec![Class::Background, Class::Unreliable, Class::Reliable],
        )
        .unwrap();
        assert_eq!(mask_from_labels(&l).bits(), &[false, false, true]);
        assert_eq!(
            mask_from_labels(&LabelMap::filled(2, 2, Class::Reliable)).count(),
            4
        );
        assert_eq!(
            mask_from_labels(&LabelMap::filled(2, 2, Class::Unreliable)).count(),
            0
        );
    }

    fn pmi_from(phase: Vec<f64>, modu: Vec<f64>, w: usize, h: usize) -> PmiImage<f64> {
        let p = FloatMap::new(w, h, phase).unwrap();
        let m = FloatMap::new(w, h, modu).unwrap();
        let i = FloatMap::filled(w, h, 0.5);
        PmiImage::new(p, m, i).unwrap()
    }

    #[test]
    fn heuristic_rules() {
        // Linear phase ramp in normalized units: wrapped second difference 0.
        let (w, h) = (5, 3);
        let phase: Vec<f64> = (0..w * h)
            .map(|i| ((i % w) as f64 * 0.05 + 0.3) % 1.0)
            .collect();
        let mut modu = vec![0.5; w * h];
        modu[7] = 0.05;
        let mut valid = Mask::filled(w, h, true);
        valid.set(0, false);
        let labels = heuristic_classify(
            &pmi_from(phase, modu, w, h),
            &valid,
            &HeuristicParams::default(),
        )
        .unwrap();
        assert_eq!(labels.at(0), Class::Background);
        assert_eq!(labels.at(7), Class::Unreliable);
        assert_eq!(labels.at(8), Class::Reliable);
    }

    #[test]
    fn heuristic_flags_phase_jumps_but_not_wraps() {
        // Carrier crossing the wrap boundary is smooth; a half-period jump is not.
        let w = 7;
        let wrapped: Vec<f64> = (0..w)
            .map(|c| {
                let phi = wrap_angle(2.6 + 0.4 * c as f64);
                (phi + std::f64::consts::PI) / std::f64::consts::TAU
            })
            .collect();
        let valid = Mask::filled(w, 1, true);
        let p = pmi_from(wrapped.clone(), vec![0.5; w], w, 1);
        let l = heuristic_classify(&p, &valid, &HeuristicParams::default()).unwrap();
        assert!(l.labels().iter().all(|&c| c == Class::Reliable));

        let mut jumped = wrapped;
        for v in jumped.iter_mut().skip(4) {
            *v = (*v + 0.5) % 1.0;
        }
        let p = pmi_from(jumped, vec![0.5; w], w, 1);
        let l = heuristic_classify(&p, &valid, &HeuristicParams::default()).unwrap();
        assert_eq!(l.at(3), Class::Unreliable);
        assert_eq!(l.at(4), Class::Unreliable);
        assert_eq!(l.at(1), Class::Reliable);
    }
}
