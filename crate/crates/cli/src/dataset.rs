//! Power-scan CSV: header `power_W,visibility,sigma_visibility`, optional
//! `#` comment lines.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use kdtli::fitting::{DataPoint, PowerScanDataset};

pub const HEADER: [&str; 3] = ["power_W", "visibility", "sigma_visibility"];

pub fn read(path: &Path) -> Result<PowerScanDataset> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read data {}", path.display()))?;
    let label = path.file_stem().map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
    parse(&text, &label).with_context(|| format!("invalid data {}", path.display()))
}

/// Fields hold plain numbers, so lines are split directly; this keeps line
/// numbers in errors exact across comment lines.
pub fn parse(text: &str, label: &str) -> Result<PowerScanDataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| anyhow!("no header line"))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names != HEADER {
        bail!("header must be {:?}, got {header:?}", HEADER.join(","));
    }
    let mut points = Vec::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != HEADER.len() {
            bail!("line {line}: expected {} fields, got {}", HEADER.len(), fields.len());
        }
        let field = |i: usize| -> Result<f64> {
            let raw = fields[i];
            let x: f64 = raw.parse().map_err(|_| anyhow!("line {line}: {} is not a number: {raw:?}", HEADER[i]))?;
            if !x.is_finite() {
                bail!("line {line}: {} must be finite", HEADER[i]);
            }
            Ok(x)
        };
        points.push(DataPoint { power: field(0)?, visibility: field(1)?, sigma: field(2)? });
    }
    Ok(PowerScanDataset::new(label, points)?)
}
