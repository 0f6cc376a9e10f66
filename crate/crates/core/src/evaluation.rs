//! Evaluation against ground truth: per-region relative-to-absolute
//! alignment, failure-case detection, depth RMSE and classification metrics.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::formats::{check_dims, Class, FloatMap, LabelMap, Mask};
use crate::masking::{connected_components_4, RegionDecomposition};
use crate::scalar::Real;
use crate::unwrap_spatial::UnwrapResult;

/// Default error-percent thresholds: 0.1% and 1% of all map points.
pub const DEFAULT_ERROR_FRACTIONS: [f64; 2] = [0.001, 0.01];

/// Phase deviation used by the phase-based failure criterion, radians.
pub const PHASE_ERROR_TOLERANCE: f64 = 0.3;

/// Relative phase shifted per region onto the absolute reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment<T> {
    pub phase: FloatMap<T>,
    /// Integer offset applied to each region (index `id - 1`); `None` when the
    /// region shares no valid point with the reference and was left as is.
    pub offsets: Vec<Option<i64>>,
}

impl<T> Alignment<T> {
    pub fn unaligned_regions(&self) -> Vec<usize> {
        self.offsets
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_none())
            .map(|(i, _)| i + 1)
            .collect()
    }
}

fn jointly_valid<T: Real>(a: &FloatMap<T>, b: &FloatMap<T>, idx: usize) -> bool {
    a.is_valid(idx) && b.is_valid(idx)
}

/// Shifts each region of `phi_rel` by `2 pi` times the most frequent value
/// of `round((Phi_gt - Phi_rel) / 2 pi)` over the region's jointly valid
/// points. Ties go to the offset of smaller magnitude, then the smaller value.
pub fn align_relative<T: Real>(
    phi_rel: &FloatMap<T>,
    phi_gt: &FloatMap<T>,
    regions: &RegionDecomposition,
) -> Result<Alignment<T>> {
    phi_rel.check_same_dims(phi_gt)?;
    check_dims(
        phi_rel.width(),
        phi_rel.height(),
        regions.width(),
        regions.height(),
    )?;
    let tau = T::two_pi();
    let mut histograms: Vec<HashMap<i64, usize>> = vec![HashMap::new(); regions.region_count()];
    for i in 0..phi_rel.len() {
        let id = regions.id_at(i);
        if id == 0 || !jointly_valid(phi_rel, phi_gt, i) {
            continue;
        }
        let k = ((phi_gt.at(i) - phi_rel.at(i)) / tau)
            .round()
            .to_i64()
            .unwrap_or(0);
        *histograms[id as usize - 1].entry(k).or_insert(0) += 1;
    }
    let offsets: Vec<Option<i64>> = histograms
        .iter()
        .map(|hist| {
            hist.iter()
                .max_by(|(ka, ca), (kb, cb)| {
                    ca.cmp(cb)
                        .then_with(|| kb.abs().cmp(&ka.abs()))
                        .then_with(|| kb.cmp(ka))
                })
                .map(|(&k, _)| k)
        })
        .collect();
    let data = phi_rel
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let id = regions.id_at(i);
            match (id > 0 && phi_rel.is_valid(i))
                .then(|| offsets[id as usize - 1])
                .flatten()
            {
                Some(k) => v + tau * T::lit(k as f64),
                None => v,
            }
        })
        .collect();
    let phase = FloatMap::new(phi_rel.width(), phi_rel.height(), data)?;
    let phase = match phi_rel.validity() {
        Some(m) => phase.with_validity(m.clone())?,
        None => phase,
    };
    Ok(Alignment { phase, offsets })
}

/// What counts as an erroneous point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureMode {
    /// Recovered fringe order differs: `round((Phi - Phi_gt) / 2 pi) != 0`.
    Order,
    /// Phase differs by more than 0.3 rad.
    Phase03,
}

/// One 4-connected region of erroneous points.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRegion {
    pub size: usize,
    /// `size` over all map points.
    pub fraction: f64,
    /// Mean of `(Phi - Phi_gt) / 2 pi` over the region.
    pub mean_order_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureReport {
    pub is_failure: bool,
    /// Every erroneous region, largest first.
    pub regions: Vec<ErrorRegion>,
    pub error_fraction: f64,
}

impl FailureReport {
    pub fn error_points(&self) -> usize {
        self.regions.iter().map(|r| r.size).sum()
    }

    /// Re-evaluates the same error regions against another threshold.
    pub fn at_threshold(&self, error_fraction: f64) -> bool {
        self.regions.iter().any(|r| r.fraction > error_fraction)
    }
}

/// Failure-case test: a map fails when some 4-connected region of erroneous
/// jointly valid points holds more than `error_fraction` of all map points.
pub fn detect_failure<T: Real>(
    phi: &FloatMap<T>,
    phi_gt: &FloatMap<T>,
    error_fraction: f64,
    mode: FailureMode,
) -> Result<FailureReport> {
    phi.check_same_dims(phi_gt)?;
    if !(error_fraction > 0.0 && error_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "error fraction {error_fraction} outside (0, 1)"
        )));
    }
    let tau = T::two_pi();
    let tol = T::lit(PHASE_ERROR_TOLERANCE);
    let diff = |i: usize| phi.at(i) - phi_gt.at(i);
    let errors = Mask::new(
        phi.width(),
        phi.height(),
        (0..phi.len())
            .map(|i| {
                jointly_valid(phi, phi_gt, i)
                    && match mode {
                        FailureMode::Order => (diff(i) / tau).round() != T::zero(),
                        FailureMode::Phase03 => diff(i).abs() > tol,
                    }
            })
            .collect(),
    )?;
    let decomposition = connected_components_4(&errors);
    let total = phi.len() as f64;
    let mut sums = vec![0.0f64; decomposition.region_count()];
    for i in 0..phi.len() {
        let id = decomposition.id_at(i);
        if id > 0 {
            sums[id as usize - 1] += (diff(i) / tau).as_f64();
        }
    }
    let mut regions: Vec<ErrorRegion> = decomposition
        .sizes()
        .iter()
        .zip(&sums)
        .map(|(&size, &sum)| ErrorRegion {
            size,
            fraction: size as f64 / total,
            mean_order_error: sum / size as f64,
        })
        .collect();
    regions.sort_by(|a, b| b.size.cmp(&a.size));
    let is_failure = regions.iter().any(|r| r.fraction > error_fraction);
    Ok(FailureReport {
        is_failure,
        regions,
        error_fraction,
    })
}

/// Root mean square difference over jointly valid points.
pub fn depth_rmse<T: Real>(depth: &FloatMap<T>, depth_gt: &FloatMap<T>) -> Result<f64> {
    depth.check_same_dims(depth_gt)?;
    let (sum, n) = (0..depth.len())
        .filter(|&i| jointly_valid(depth, depth_gt, i))
        .fold((0.0f64, 0usize), |(s, n), i| {
            let d = (depth.at(i) - depth_gt.at(i)).as_f64();
            (s + d * d, n + 1)
        });
    if n == 0 {
        return Err(Error::NoValidPoints);
    }
    Ok((sum / n as f64).sqrt())
}

/// Pixel-accuracy family of segmentation metrics from a 3x3 confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub pa: f64,
    pub mpa: f64,
    pub miou: f64,
    pub fwiou: f64,
    /// Per-class recall; `None` for classes absent from the ground truth.
    pub cpa: [Option<f64>; 3],
    pub iou: [Option<f64>; 3],
    /// `confusion[gt][pred]`.
    pub confusion: [[u64; 3]; 3],
}

/// Metrics from a confusion matrix indexed `[gt][pred]`. Classes absent
/// from the ground truth are excluded from the means.
pub fn metrics_from_confusion(confusion: [[u64; 3]; 3]) -> ClassMetrics {
    let total: u64 = confusion.iter().flatten().sum();
    let gt_count = |c: usize| confusion[c].iter().sum::<u64>();
    let pred_count = |c: usize| (0..3).map(|g| confusion[g][c]).sum::<u64>();
    let mut cpa = [None; 3];
    let mut iou = [None; 3];
    let mut fwiou = 0.0;
    for c in 0..3 {
        let n = gt_count(c);
        if n == 0 {
            continue;
        }
        let tp = confusion[c][c];
        let union = n + pred_count(c) - tp;
        cpa[c] = Some(tp as f64 / n as f64);
        let i = tp as f64 / union as f64;
        iou[c] = Some(i);
        fwiou += n as f64 / total as f64 * i;
    }
    let mean = |v: &[Option<f64>; 3]| {
        let present: Vec<f64> = v.iter().flatten().copied().collect();
        if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        }
    };
    let trace: u64 = (0..3).map(|c| confusion[c][c]).sum();
    ClassMetrics {
        pa: if total == 0 {
            0.0
        } else {
            trace as f64 / total as f64
        },
        mpa: mean(&cpa),
        miou: mean(&iou),
        fwiou,
        cpa,
        iou,
        confusion,
    }
}

pub fn classification_metrics(pred: &LabelMap, gt: &LabelMap) -> Result<ClassMetrics> {
    check_dims(pred.width(), pred.height(), gt.width(), gt.height())?;
    let mut confusion = [[0u64; 3]; 3];
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        confusion[g.index()][p.index()] += 1;
    }
    Ok(metrics_from_confusion(confusion))
}

/// Restricts a reference map to the points of `valid`.
pub fn restrict<T: Real>(map: &FloatMap<T>, valid: &Mask) -> Result<FloatMap<T>> {
    let combined = map.valid_mask().and(valid)?;
    map.clone().without_validity().with_validity(combined)
}

/// Ground-truth validity from labels: everything except background.
pub fn object_mask(labels: &LabelMap) -> Mask {
    Mask::new(
        labels.width(),
        labels.height(),
        labels
            .labels()
            .iter()
            .map(|&c| c != Class::Background)
            .collect(),
    )
    .expect("length matches")
}

/// Alignment plus failure analysis of one unwrapping result.
#[derive(Debug, Clone, PartialEq)]
pub struct UnwrapEvaluation<T> {
    pub alignment: Alignment<T>,
    /// Error regions; query other thresholds with [`FailureReport::at_threshold`].
    pub report: FailureReport,
}

/// Aligns `result` onto `phi_gt` and runs the failure test, comparing only
/// points that are valid in both the result and `gt_valid`.
pub fn evaluate_unwrap<T: Real>(
    result: &UnwrapResult<T>,
    phi_gt: &FloatMap<T>,
    gt_valid: &Mask,
    error_fraction: f64,
    mode: FailureMode,
) -> Result<UnwrapEvaluation<T>> {
    let gt = restrict(phi_gt, gt_valid)?;
    let alignment = align_relative(&result.phase, &gt, &result.regions)?;
    let report = detect_failure(&alignment.phase, &gt, error_fraction, mode)?;
    Ok(UnwrapEvaluation { alignment, report })
}
