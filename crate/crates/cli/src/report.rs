//! Rows of the evaluation CSV.

use spu_core::evaluation::{ClassMetrics, FailureReport};

pub const REPORT_HEADER: [&str; 12] = [
    "map_id",
    "method",
    "threshold",
    "failure",
    "rmse",
    "pa",
    "mpa",
    "miou",
    "fwiou",
    "cpa0",
    "cpa1",
    "cpa2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub map_id: String,
    pub method: String,
    pub threshold: f64,
    pub failure: bool,
    pub rmse: Option<f64>,
    pub metrics: Option<ClassMetrics>,
}

fn num(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

impl ReportRow {
    pub fn fields(&self) -> Vec<String> {
        let m = self.metrics.as_ref();
        vec![
            self.map_id.clone(),
            self.method.clone(),
            format!("{}", self.threshold),
            (self.failure as u8).to_string(),
            num(self.rmse),
            num(m.map(|m| m.pa)),
            num(m.map(|m| m.mpa)),
            num(m.map(|m| m.miou)),
            num(m.map(|m| m.fwiou)),
            num(m.and_then(|m| m.cpa[0])),
            num(m.and_then(|m| m.cpa[1])),
            num(m.and_then(|m| m.cpa[2])),
        ]
    }
}

/// One row per error-percent threshold for a single unwrapped map.
pub fn rows_for(
    map_id: &str,
    method: &str,
    report: &FailureReport,
    thresholds: &[f64],
    rmse: Option<f64>,
    metrics: Option<&ClassMetrics>,
) -> Vec<ReportRow> {
    thresholds
        .iter()
        .map(|&t| ReportRow {
            map_id: map_id.to_string(),
            method: method.to_string(),
            threshold: t,
            failure: report.at_threshold(t),
            rmse,
            metrics: metrics.cloned(),
        })
        .collect()
}
