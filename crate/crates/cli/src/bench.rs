//! Full pipeline over a synthetic suite.

use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;
use spu_core::composite::build_pmi_with;
use spu_core::composite::PmiParams;
use spu_core::evaluation::{classification_metrics, depth_rmse, evaluate_unwrap, object_mask};
use spu_core::masking::{heuristic_classify, mask_from_labels, HeuristicParams};
use spu_core::synth_scenes::{generate_scene, scene_suite_sized};
use spu_core::unwrap_spatial::{unwrap_with, Method};
use spu_core::{Class, LabelMap};

use crate::commands::{check_thresholds, parse_suite, scene_id};
use crate::io::{read_labels, write_report};
use crate::report::{rows_for, ReportRow};
use crate::{ClassifierArg, ThresholdArgs, UsageError};

pub struct BenchArgs {
    pub suite: String,
    pub count: usize,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub classifier: ClassifierArg,
    pub labels_dir: Option<PathBuf>,
    pub baseline_threshold: f64,
    pub methods: Vec<Method>,
    pub thresholds: ThresholdArgs,
    pub out: Option<PathBuf>,
}

fn scene_rows(
    args: &BenchArgs,
    index: usize,
    spec: &spu_core::synth_scenes::SceneSpec,
) -> Result<Vec<ReportRow>> {
    let mode = check_thresholds(&args.thresholds)?;
    let id = scene_id(index);
    let truth = generate_scene::<f64>(spec)?;
    let pmi = build_pmi_with(&truth.stack, &PmiParams::default())?;
    let baseline = build_pmi_with(
        &truth.stack,
        &PmiParams {
            modulation_threshold: args.baseline_threshold,
            ..PmiParams::default()
        },
    )
    .map(|p| p.validity)
    .or_else(|e| match e {
        spu_core::Error::NoValidPoints | spu_core::Error::DegenerateMap(_) => {
            Ok(spu_core::Mask::filled(spec.width, spec.height, false))
        }
        e => Err(e),
    })?;
    let labels: LabelMap = match (&args.labels_dir, args.classifier) {
        (Some(dir), _) => read_labels(&dir.join(format!("{id}.pgm")))?,
        (None, ClassifierArg::Heuristic) => {
            heuristic_classify(&pmi.pmi, &pmi.validity, &HeuristicParams::default())?
        }
        (None, ClassifierArg::Oracle) => truth.labels.clone(),
        (None, ClassifierArg::Threshold) => LabelMap::from_validity(&pmi.validity),
        (None, ClassifierArg::None) => LabelMap::filled(spec.width, spec.height, Class::Reliable),
    };
    let gt_valid = object_mask(&truth.labels);
    let mut rows = Vec::new();
    for &method in &args.methods {
        let (mask, predicted) = if method == Method::FloodFill {
            (mask_from_labels(&labels), labels.clone())
        } else {
            (baseline.clone(), LabelMap::from_validity(&baseline))
        };
        let result = unwrap_with(
            method,
            &pmi.phase.clone().without_validity(),
            &mask,
            &pmi.modulation,
        )?;
        let eval = evaluate_unwrap(
            &result,
            &truth.phi_gt,
            &gt_valid,
            args.thresholds.thresholds[0],
            mode,
        )?;
        let gt = spu_core::evaluation::restrict(&truth.phi_gt, &gt_valid)?;
        let rmse = depth_rmse(&eval.alignment.phase, &gt).ok();
        let metrics = classification_metrics(&predicted, &truth.labels)?;
        rows.extend(rows_for(
            &id,
            method.name(),
            &eval.report,
            &args.thresholds.thresholds,
            rmse,
            Some(&metrics),
        ));
    }
    Ok(rows)
}

pub fn run(args: BenchArgs) -> Result<()> {
    check_thresholds(&args.thresholds)?;
    if args.methods.is_empty() {
        return Err(UsageError("no methods selected".into()).into());
    }
    let suite = parse_suite(&args.suite)?;
    let specs = scene_suite_sized(suite, args.count, args.seed, args.width, args.height)
        .map_err(|e| UsageError(e.to_string()))?;
    let per_scene: Vec<Vec<ReportRow>> = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| scene_rows(&args, i, spec).with_context(|| scene_id(i)))
        .collect::<Result<_>>()?;
    let rows: Vec<ReportRow> = per_scene.into_iter().flatten().collect();
    write_report(args.out.as_deref(), &rows)?;

    eprintln!(
        "{:<8} {:>10} {:>9} {:>8}",
        "method", "threshold", "failures", "rate"
    );
    for &method in &args.methods {
        for &t in &args.thresholds.thresholds {
            let failures = rows
                .iter()
                .filter(|r| r.method == method.name() && r.threshold == t && r.failure)
                .count();
            eprintln!(
                "{:<8} {:>10} {:>9} {:>7.2}%",
                method.name(),
                t,
                format!("{failures}/{}", specs.len()),
                100.0 * failures as f64 / specs.len() as f64
            );
        }
    }
    Ok(())
}
