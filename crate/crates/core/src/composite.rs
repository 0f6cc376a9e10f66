//! Composite PMI images: normalized phase, modulation and background stacked
//! into three channels in `[0, 1]`.

use crate::error::{Error, Result};
use crate::formats::{FloatMap, FringeStack, Mask, PmiImage};
use crate::masking::{
    remove_small_regions, threshold_mask, DEFAULT_MIN_REGION_FRACTION, DEFAULT_MODULATION_THRESHOLD,
};
use crate::phase_decode::{decode_background, decode_modulation, decode_wrapped};
use crate::scalar::Real;

/// Outcome of [`intra_frame_normalize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationReport<T> {
    /// Largest valid value left after dropping the top percentile.
    pub t_max: T,
    /// Number of valid points excluded as the top one percent.
    pub removed_count: usize,
}

impl<T: Real> NormalizationReport<T> {
    /// The normalization applied to one value.
    pub fn apply(&self, v: T) -> T {
        if v > self.t_max {
            T::one()
        } else {
            v / self.t_max
        }
    }
}

/// Number of top values excluded: `ceil(1% of n)`, capped so one value remains.
fn removal_count(n_valid: usize) -> usize {
    let top = (n_valid as f64 * 0.01).ceil() as usize;
    top.min(n_valid.saturating_sub(1))
}

/// Per-map linear normalization after discarding the top one percent of valid
/// values. Values above the remaining maximum saturate at 1.
pub fn intra_frame_normalize<T: Real>(
    map: &FloatMap<T>,
) -> Result<(FloatMap<T>, NormalizationReport<T>)> {
    let mut values: Vec<T> = map
        .data()
        .iter()
        .enumerate()
        .filter(|&(i, _)| map.is_valid(i))
        .map(|(_, &v)| v)
        .collect();
    if values.is_empty() {
        return Err(Error::NoValidPoints);
    }
    let removed = removal_count(values.len());
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
    let t_max = values[removed];
    if t_max <= T::zero() {
        return Err(Error::DegenerateMap(t_max.as_f64()));
    }
    let report = NormalizationReport {
        t_max,
        removed_count: removed,
    };
    let out = FloatMap::new(
        map.width(),
        map.height(),
        map.data()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if map.is_valid(i) {
                    report.apply(v)
                } else {
                    T::zero()
                }
            })
            .collect(),
    )?;
    let out = match map.validity() {
        Some(m) => out.with_validity(m.clone())?,
        None => out,
    };
    Ok((out, report))
}

/// Maps wrapped phase `(-pi, pi]` linearly onto `(0, 1]`; invalid points are 0.
pub fn normalize_phase<T: Real>(phi: &FloatMap<T>) -> FloatMap<T> {
    let data = phi
        .data()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if phi.is_valid(i) {
                ((p + T::PI()) / T::two_pi()).max(T::zero()).min(T::one())
            } else {
                T::zero()
            }
        })
        .collect();
    let out = FloatMap::new(phi.width(), phi.height(), data).expect("finite");
    match phi.validity() {
        Some(m) => out.with_validity(m.clone()).expect("dims match"),
        None => out,
    }
}

/// Settings of [`build_pmi_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmiParams {
    pub modulation_threshold: f64,
    pub min_region_fraction: f64,
}

impl Default for PmiParams {
    fn default() -> Self {
        Self {
            modulation_threshold: DEFAULT_MODULATION_THRESHOLD,
            min_region_fraction: DEFAULT_MIN_REGION_FRACTION,
        }
    }
}

/// Everything produced while building a PMI image.
#[derive(Debug, Clone, PartialEq)]
pub struct PmiOutput<T> {
    pub pmi: PmiImage<T>,
    /// Wrapped phase, invalid outside `validity`.
    pub phase: FloatMap<T>,
    pub modulation: FloatMap<T>,
    pub background: FloatMap<T>,
    pub validity: Mask,
    pub modulation_report: NormalizationReport<T>,
    pub background_report: NormalizationReport<T>,
}

/// [`build_pmi_with`] using the default small-region fraction.
pub fn build_pmi<T: Real>(
    stack: &FringeStack<T>,
    background_threshold: f64,
) -> Result<PmiOutput<T>> {
    build_pmi_with(
        stack,
        &PmiParams {
            modulation_threshold: background_threshold,
            ..PmiParams::default()
        },
    )
}

/// Turns a fringe stack into a PMI image:
///
/// 1. decode wrapped phase, background and modulation;
/// 2. invalidate points with modulation `<=` the threshold;
/// 3. drop 4-connected valid regions smaller than the fraction of all points;
/// 4. normalize modulation and background per map;
/// 5. normalize the phase and stack the channels.
pub fn build_pmi_with<T: Real>(stack: &FringeStack<T>, params: &PmiParams) -> Result<PmiOutput<T>> {
    let phase = decode_wrapped(stack);
    let modulation = decode_modulation(stack);
    let background = decode_background(stack);

    let decodable = phase.valid_mask();
    let above = threshold_mask(&modulation, T::lit(params.modulation_threshold));
    let validity = remove_small_regions(&decodable.and(&above)?, params.min_region_fraction);

    let phase = phase.without_validity().with_validity(validity.clone())?;
    let modulation = modulation.with_validity(validity.clone())?;
    let background = background.with_validity(validity.clone())?;

    let (norm_mod, modulation_report) = intra_frame_normalize(&modulation)?;
    let (norm_bg, background_report) = intra_frame_normalize(&background)?;
    let norm_phase = normalize_phase(&phase);
    let pmi = PmiImage::new(norm_phase, norm_mod, norm_bg)?;

    Ok(PmiOutput {
        pmi,
        phase,
        modulation,
        background,
        validity,
        modulation_report,
        background_report,
    })
}
