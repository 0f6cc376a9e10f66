//! Single-map subcommands.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use spu_core::composite::{build_pmi_with, PmiParams};
use spu_core::evaluation::{
    align_relative, classification_metrics, depth_rmse, detect_failure, object_mask, restrict,
    FailureMode,
};
use spu_core::labeling::{detect_outliers, make_labels, OutlierParams};
use spu_core::masking::{connected_components_4, heuristic_classify, HeuristicParams};
use spu_core::phase_decode::{decode_background, decode_modulation, decode_wrapped};
use spu_core::reconstruct3d::{export_ply, reconstruct as reconstruct_cloud};
use spu_core::synth_scenes::{generate_scene, scene_suite_sized, SceneSpec};
use spu_core::unwrap_spatial::{unwrap_with, Method};
use spu_core::unwrap_temporal::{decode_fringe_order, tpu_unwrap, GraycodeSet};
use spu_core::{Error, FloatMap, LabelMap, Mask, PmiImage, SceneTruth64, SystemCalibration};

use crate::io::{
    read_fpm, read_frames, read_labels, read_mask, read_orders, read_stack, with_suffix,
    write_atomic, write_fpm, write_frames, write_labels, write_orders, write_report,
};
use crate::report::rows_for;
use crate::{ModeArg, ThresholdArgs, UsageError};

pub fn decode(stack: &Path, out: &Path) -> Result<()> {
    let stack = read_stack(stack)?;
    let phi = decode_wrapped(&stack);
    write_fpm(&with_suffix(out, "_phi.fpm"), &phi)?;
    write_fpm(&with_suffix(out, "_bg.fpm"), &decode_background(&stack))?;
    write_fpm(&with_suffix(out, "_mod.fpm"), &decode_modulation(&stack))?;
    write_labels(
        &with_suffix(out, "_valid.pgm"),
        &LabelMap::from_validity(&phi.valid_mask()),
    )
}

pub fn pmi(stack: &Path, out: &Path, threshold: f64, min_region: f64) -> Result<()> {
    let stack = read_stack(stack)?;
    let params = PmiParams {
        modulation_threshold: threshold,
        min_region_fraction: min_region,
    };
    let res = build_pmi_with(&stack, &params)?;
    write_fpm(&with_suffix(out, "_p.fpm"), res.pmi.phase())?;
    write_fpm(&with_suffix(out, "_m.fpm"), res.pmi.modulation())?;
    write_fpm(&with_suffix(out, "_i.fpm"), res.pmi.intensity())?;
    write_labels(
        &with_suffix(out, "_valid.pgm"),
        &LabelMap::from_validity(&res.validity),
    )?;
    write_fpm(&with_suffix(out, "_phi.fpm"), &res.phase)?;
    write_fpm(&with_suffix(out, "_mod.fpm"), &res.modulation)
}

pub fn classify(pmi: &Path, out: &Path, q_low: f64, tau_d: f64) -> Result<()> {
    let image = PmiImage::new(
        read_fpm(&with_suffix(pmi, "_p.fpm"))?,
        read_fpm(&with_suffix(pmi, "_m.fpm"))?,
        read_fpm(&with_suffix(pmi, "_i.fpm"))?,
    )?;
    let validity = read_mask(&with_suffix(pmi, "_valid.pgm"))?;
    let labels = heuristic_classify(&image, &validity, &HeuristicParams { q_low, tau_d })?;
    write_labels(out, &labels)
}

pub fn unwrap(
    phase: &Path,
    mask: Option<&Path>,
    quality: Option<&Path>,
    method: Method,
    out: &Path,
) -> Result<()> {
    if method == Method::ModuSort && quality.is_none() {
        return Err(UsageError("--method modu needs --quality".into()).into());
    }
    let phi = read_fpm(phase)?;
    let mask = match mask {
        Some(p) => read_mask(p)?,
        None => Mask::filled(phi.width(), phi.height(), true),
    };
    let quality = match quality {
        Some(p) => read_fpm(p)?,
        None => FloatMap::filled(phi.width(), phi.height(), 1.0),
    };
    let result = unwrap_with(method, &phi, &mask, &quality)?;
    write_fpm(&with_suffix(out, ".fpm"), &result.phase)?;
    write_orders(&with_suffix(out, ".fpk"), &result.orders)
}

pub fn tpu(stack: &Path, graycode: &Path, fringes: Option<usize>, out: &Path) -> Result<()> {
    let stack = read_stack(stack)?;
    let images = read_frames(graycode)?;
    let fringes = fringes.unwrap_or(1 << (images.len().saturating_sub(1)).min(30));
    let set = GraycodeSet::new(fringes, images, decode_background(&stack))?;
    let phi = decode_wrapped(&stack);
    let orders = decode_fringe_order(&set, &phi)?;
    write_fpm(&with_suffix(out, ".fpm"), &tpu_unwrap(&phi, &orders)?)?;
    write_orders(&with_suffix(out, ".fpk"), &orders)
}

pub fn label(
    modulation: &Path,
    depth: &Path,
    out: &Path,
    threshold: f64,
    params: OutlierParams,
) -> Result<()> {
    let modulation = read_fpm(modulation)?;
    let filtered = detect_outliers(&read_fpm(depth)?, &params)?;
    write_labels(out, &make_labels(&modulation, &filtered, threshold)?)
}

pub struct EvalArgs<'a> {
    pub unwrapped: &'a Path,
    pub gt: &'a Path,
    pub gt_labels: Option<&'a Path>,
    pub pred_labels: Option<&'a Path>,
    pub depth: Option<(&'a Path, &'a Path)>,
    pub map_id: &'a str,
    pub method: &'a str,
    pub thresholds: &'a ThresholdArgs,
    pub out: Option<&'a Path>,
}

pub fn check_thresholds(t: &ThresholdArgs) -> Result<FailureMode> {
    if t.thresholds.is_empty() || t.thresholds.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(
            UsageError(format!("thresholds must lie in (0, 1): {:?}", t.thresholds)).into(),
        );
    }
    Ok(match t.mode {
        ModeArg::Order => FailureMode::Order,
        ModeArg::Phase => FailureMode::Phase03,
    })
}

/// Depth map with zeros marked invalid.
fn read_depth(path: &Path) -> Result<FloatMap<f64>> {
    let d = read_fpm(path)?;
    let valid = Mask::new(
        d.width(),
        d.height(),
        d.data().iter().map(|&v| v != 0.0).collect(),
    )?;
    Ok(d.with_validity(valid)?)
}

pub fn eval(args: EvalArgs<'_>) -> Result<()> {
    let mode = check_thresholds(args.thresholds)?;
    let orders = read_orders(&with_suffix(args.unwrapped, ".fpk"))?;
    let phase =
        read_fpm(&with_suffix(args.unwrapped, ".fpm"))?.with_validity(orders.validity().clone())?;
    let gt_labels = args.gt_labels.map(read_labels).transpose()?;
    let gt_valid = match &gt_labels {
        Some(l) => object_mask(l),
        None => Mask::filled(phase.width(), phase.height(), true),
    };
    let gt = restrict(&read_fpm(args.gt)?, &gt_valid)?;
    let regions = connected_components_4(orders.validity());
    let aligned = align_relative(&phase, &gt, &regions)?;
    let report = detect_failure(&aligned.phase, &gt, args.thresholds.thresholds[0], mode)?;
    let rmse = match args.depth {
        Some((d, g)) => depth_rmse(&read_depth(d)?, &read_depth(g)?),
        None => depth_rmse(&aligned.phase, &gt),
    };
    let rmse = match rmse {
        Ok(v) => Some(v),
        Err(Error::NoValidPoints) => None,
        Err(e) => return Err(e.into()),
    };
    let metrics = match (args.pred_labels, &gt_labels) {
        (Some(p), Some(g)) => Some(classification_metrics(&read_labels(p)?, g)?),
        (Some(_), None) => return Err(UsageError("--pred-labels needs --gt-labels".into()).into()),
        _ => None,
    };
    let rows = rows_for(
        args.map_id,
        args.method,
        &report,
        &args.thresholds.thresholds,
        rmse,
        metrics.as_ref(),
    );
    write_report(args.out, &rows)
}

/// Scene directory layout: `scene.toml`, `stack_NN.fpm`, `graycode_NN.fpm`,
/// `phi_gt.fpm`, `orders_gt.fpk`, `labels_gt.pgm`, `depth_gt.fpm`,
/// `modulation_gt.fpm`.
pub fn write_scene(dir: &Path, truth: &SceneTruth64) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_atomic(&dir.join("scene.toml"), truth.spec.to_toml().as_bytes())?;
    write_frames(&dir.join("stack"), truth.stack.frames())?;
    write_frames(&dir.join("graycode"), truth.graycode.images())?;
    write_fpm(&dir.join("phi_gt.fpm"), &truth.phi_gt)?;
    write_orders(&dir.join("orders_gt.fpk"), &truth.k_gt)?;
    write_labels(&dir.join("labels_gt.pgm"), &truth.labels)?;
    write_fpm(&dir.join("depth_gt.fpm"), &truth.depth_gt)?;
    write_fpm(&dir.join("modulation_gt.fpm"), &truth.modulation_gt)
}

pub fn scene_id(i: usize) -> String {
    format!("scene_{i:03}")
}

pub fn parse_suite(name: &str) -> Result<spu_core::synth_scenes::Suite> {
    name.parse().map_err(|e: Error| {
        UsageError(format!(
            "{e}; expected simple, reflectivity, blur, discontinuity or complex"
        ))
        .into()
    })
}

pub fn synth_suite(
    name: &str,
    count: usize,
    seed: u64,
    width: usize,
    height: usize,
    out: &Path,
) -> Result<()> {
    let suite = parse_suite(name)?;
    let specs = scene_suite_sized(suite, count, seed, width, height)
        .map_err(|e| UsageError(e.to_string()))?;
    specs.par_iter().enumerate().try_for_each(|(i, spec)| {
        let truth = generate_scene::<f64>(spec)?;
        write_scene(&out.join(scene_id(i)), &truth)
    })
}

pub fn synth_spec(spec: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let spec = SceneSpec::from_toml(&text)?;
    write_scene(out, &generate_scene::<f64>(&spec)?)
}

pub fn reconstruct(phase: &Path, orders: Option<&Path>, calib: &Path, out: &Path) -> Result<()> {
    let mut phi = read_fpm(phase)?;
    if let Some(o) = orders {
        phi = phi.with_validity(read_orders(o)?.validity().clone())?;
    }
    let text = fs::read_to_string(calib).with_context(|| format!("reading {}", calib.display()))?;
    let calib = SystemCalibration::from_text(&text)?;
    let (cloud, depth) = reconstruct_cloud(&phi, &calib)?;
    write_atomic(&with_suffix(out, ".ply"), &export_ply(&cloud))?;
    write_fpm(&with_suffix(out, "_depth.fpm"), &depth)
}

pub fn calib(width: usize, height: usize, period: f64, out: &Path) -> Result<()> {
    let calib = SystemCalibration::synthetic(width, height, period)
        .map_err(|e| UsageError(e.to_string()))?;
    write_atomic(out, calib.to_text().as_bytes())
}
