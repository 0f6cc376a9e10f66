//! Ground-truth class labels from a temporally unwrapped depth map.
//!
//! Outliers are found in three passes: a robust bilateral estimate of the
//! depth, suppression of maximal deviations inside high-variance windows, and
//! removal of small surviving regions. Outliers are zeroed; the labels then
//! follow from modulation and filtered depth.

use crate::error::{Error, Result};
use crate::formats::{check_dims, Class, FloatMap, LabelMap, Mask};
use crate::masking::{remove_small_regions, DEFAULT_MODULATION_THRESHOLD};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierParams {
    /// Bilateral spatial sigma, pixels.
    pub spatial_sigma: f64,
    /// Bilateral range sigma, depth units.
    pub range_sigma: f64,
    /// Side of the square variance window, odd and at least 3.
    pub window: usize,
    /// Window variance above which suppression starts, depth units squared.
    pub variance_threshold: f64,
    pub min_region_fraction: f64,
}

impl Default for OutlierParams {
    fn default() -> Self {
        Self {
            spatial_sigma: 3.0,
            range_sigma: 0.5,
            window: 5,
            variance_threshold: 0.25,
            min_region_fraction: 0.01,
        }
    }
}

impl OutlierParams {
    fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "variance window {} must be odd and >= 3",
                self.window
            )));
        }
        if !(self.spatial_sigma > 0.0 && self.range_sigma > 0.0) {
            return Err(Error::InvalidParameter(
                "bilateral sigmas must be > 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.min_region_fraction) {
            return Err(Error::InvalidParameter(
                "region fraction outside [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

fn window_indices(
    idx: usize,
    radius: usize,
    width: usize,
    height: usize,
) -> impl Iterator<Item = usize> {
    let row = idx / width;
    let col = idx % width;
    let r0 = row.saturating_sub(radius);
    let r1 = (row + radius).min(height - 1);
    let c0 = col.saturating_sub(radius);
    let c1 = (col + radius).min(width - 1);
    (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| r * width + c))
}

/// Bilateral estimate whose range kernel is centred on the local median
/// rather than the point itself, so isolated spikes do not anchor their own
/// estimate.
fn robust_bilateral(
    depth: &[f64],
    valid: &[bool],
    width: usize,
    height: usize,
    p: &OutlierParams,
) -> Vec<f64> {
    let radius = (2.0 * p.spatial_sigma).ceil() as usize;
    let two_ss = 2.0 * p.spatial_sigma * p.spatial_sigma;
    let two_rr = 2.0 * p.range_sigma * p.range_sigma;
    let mut out = vec![0.0; depth.len()];
    let mut local = Vec::new();
    for idx in 0..depth.len() {
        if !valid[idx] {
            continue;
        }
        local.clear();
        local.extend(
            window_indices(idx, radius, width, height)
                .filter(|&q| valid[q])
                .map(|q| depth[q]),
        );
        local.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let centre = local[local.len() / 2];
        let (row, col) = ((idx / width) as f64, (idx % width) as f64);
        let mut num = 0.0;
        let mut den = 0.0;
        for q in window_indices(idx, radius, width, height).filter(|&q| valid[q]) {
            let dr = (q / width) as f64 - row;
            let dc = (q % width) as f64 - col;
            let dz = depth[q] - centre;
            let wgt = (-(dr * dr + dc * dc) / two_ss - dz * dz / two_rr).exp();
            num += wgt * depth[q];
            den += wgt;
        }
        out[idx] = if den > 0.0 { num / den } else { centre };
    }
    out
}

/// Zeroes outliers of a depth map (0 encodes already-invalid points).
/// Surviving points keep their original values.
pub fn detect_outliers<T: Real>(
    depth: &FloatMap<T>,
    params: &OutlierParams,
) -> Result<FloatMap<T>> {
    params.validate()?;
    let (w, h) = (depth.width(), depth.height());
    let z: Vec<f64> = depth.data().iter().map(|v| v.as_f64()).collect();
    let mut alive: Vec<bool> = z
        .iter()
        .enumerate()
        .map(|(i, &v)| v != 0.0 && depth.is_valid(i))
        .collect();
    if w == 0 || h == 0 {
        return Ok(depth.clone());
    }

    let reference = robust_bilateral(&z, &alive, w, h, params);
    let deviation: Vec<f64> = z
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .collect();

    let radius = params.window / 2;
    let originally_valid = alive.clone();
    let mut members = Vec::new();
    for centre in 0..z.len() {
        if !originally_valid[centre] {
            continue;
        }
        members.clear();
        members.extend(window_indices(centre, radius, w, h).filter(|&q| alive[q]));
        let initial = members.len();
        while members.len() * 2 > initial && variance(&members, &z) > params.variance_threshold {
            let (pos, _) =
                members
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (k, &q)| {
                        if deviation[q] > best.1 {
                            (k, deviation[q])
                        } else {
                            best
                        }
                    });
            alive[members.remove(pos)] = false;
        }
    }

    let survivors = remove_small_regions(&Mask::new(w, h, alive)?, params.min_region_fraction);
    let data = depth
        .data()
        .iter()
        .zip(survivors.bits())
        .map(|(&v, &keep)| if keep { v } else { T::zero() })
        .collect();
    FloatMap::new(w, h, data)
}

fn variance(members: &[usize], z: &[f64]) -> f64 {
    if members.len() < 2 {
        return 0.0;
    }
    let n = members.len() as f64;
    let mean = members.iter().map(|&q| z[q]).sum::<f64>() / n;
    members.iter().map(|&q| (z[q] - mean).powi(2)).sum::<f64>() / n
}

/// Three-class labels: 0 where modulation `<=` threshold, 1 where the
/// filtered depth is 0, 2 otherwise.
pub fn make_labels<T: Real>(
    modulation: &FloatMap<T>,
    filtered_depth: &FloatMap<T>,
    modulation_threshold: T,
) -> Result<LabelMap> {
    check_dims(
        modulation.width(),
        modulation.height(),
        filtered_depth.width(),
        filtered_depth.height(),
    )?;
    let labels = modulation
        .data()
        .iter()
        .zip(filtered_depth.data())
        .map(|(&m, &d)| {
            if m <= modulation_threshold {
                Class::Background
            } else if d == T::zero() {
                Class::Unreliable
            } else {
                Class::Reliable
            }
        })
        .collect();
    LabelMap::new(modulation.width(), modulation.height(), labels)
}

/// [`make_labels`] with the default threshold of 2.
pub fn make_labels_default<T: Real>(
    modulation: &FloatMap<T>,
    filtered_depth: &FloatMap<T>,
) -> Result<LabelMap> {
    make_labels(
        modulation,
        filtered_depth,
        T::lit(DEFAULT_MODULATION_THRESHOLD),
    )
}
