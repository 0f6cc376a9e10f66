//! File helpers. Every write goes to a sibling temp file first and is then
//! renamed over the target.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use spu_core::formats::{
    decode_fpm, decode_labelmap, decode_orders, encode_fpm, encode_labelmap, encode_orders,
};
use spu_core::{FloatMap, FringeStack, LabelMap, Mask, OrderMap};

use crate::report::{ReportRow, REPORT_HEADER};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_fpm(path: &Path) -> Result<FloatMap<f64>> {
    decode_fpm(&read(path)?).with_context(|| format!("decoding {}", path.display()))
}

pub fn write_fpm(path: &Path, map: &FloatMap<f64>) -> Result<()> {
    let bytes = encode_fpm(map).with_context(|| format!("encoding {}", path.display()))?;
    write_atomic(path, &bytes)
}

pub fn read_labels(path: &Path) -> Result<LabelMap> {
    decode_labelmap(&read(path)?).with_context(|| format!("decoding {}", path.display()))
}

pub fn write_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    write_atomic(path, &encode_labelmap(labels))
}

pub fn read_orders(path: &Path) -> Result<OrderMap> {
    decode_orders(&read(path)?).with_context(|| format!("decoding {}", path.display()))
}

pub fn write_orders(path: &Path, orders: &OrderMap) -> Result<()> {
    let bytes = encode_orders(orders).with_context(|| format!("encoding {}", path.display()))?;
    write_atomic(path, &bytes)
}

/// `<prefix><suffix>` without touching any extension already in the prefix.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Numbered frame file `<prefix>_NN.fpm`.
pub fn frame_path(prefix: &Path, n: usize) -> PathBuf {
    with_suffix(prefix, &format!("_{n:02}.fpm"))
}

/// Reads `<prefix>_00.fpm`, `<prefix>_01.fpm`, ... up to the first gap.
pub fn read_frames(prefix: &Path) -> Result<Vec<FloatMap<f64>>> {
    let mut frames = Vec::new();
    loop {
        let path = frame_path(prefix, frames.len());
        if !path.exists() {
            break;
        }
        frames.push(read_fpm(&path)?);
    }
    if frames.is_empty() {
        bail!("no frames found at {}", frame_path(prefix, 0).display());
    }
    Ok(frames)
}

pub fn read_stack(prefix: &Path) -> Result<FringeStack<f64>> {
    FringeStack::new(read_frames(prefix)?).with_context(|| format!("stack {}", prefix.display()))
}

pub fn write_frames(prefix: &Path, frames: &[FloatMap<f64>]) -> Result<()> {
    for (n, f) in frames.iter().enumerate() {
        write_fpm(&frame_path(prefix, n), f)?;
    }
    Ok(())
}

/// Valid where the label file says reliable (a 0/2 validity file works too).
pub fn read_mask(path: &Path) -> Result<Mask> {
    Ok(spu_core::masking::mask_from_labels(&read_labels(path)?))
}

pub fn write_report(path: Option<&Path>, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| anyhow::anyhow!("flushing csv: {e}"))?;
    match path {
        Some(p) => write_atomic(p, &bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}
