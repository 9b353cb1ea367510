use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TimeSeriesFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub zero_variance: bool,
}

impl ColumnStats {
    pub fn apply(&self, x: f64) -> f64 {
        if self.zero_variance {
            0.0
        } else {
            (x - self.mean) / self.std
        }
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub columns: Vec<ColumnStats>,
}

impl StandardizationStats {
    pub fn get(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// Per-column mean and population std over `train_rows`, skipping missing
/// entries.
pub fn fit_standardize(frame: &TimeSeriesFrame, train_rows: Range<usize>) -> Result<StandardizationStats> {
    if train_rows.is_empty() || train_rows.end > frame.len() {
        return Err(Error::Contract(format!(
            "standardization needs a nonempty training range within {} rows, got {train_rows:?}",
            frame.len()
        )));
    }
    let mut stats = Vec::with_capacity(frame.columns().len());
    for col in frame.columns() {
        let vals: Vec<f64> = train_rows.clone().filter_map(|r| col.get(r)).collect();
        if vals.is_empty() {
            return Err(Error::Contract(format!("column `{}` has no training values", col.name)));
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        let zero_variance = std == 0.0;
        if zero_variance {
            log::warn!("column `{}` has zero variance over the training rows", col.name);
        }
        stats.push(ColumnStats {
            name: col.name.clone(),
            mean,
            std,
            zero_variance,
        });
    }
    Ok(StandardizationStats { columns: stats })
}

/// Z-scores every column listed in `stats`; other columns pass through.
pub fn apply_standardize(frame: &TimeSeriesFrame, stats: &StandardizationStats) -> Result<TimeSeriesFrame> {
    let mut out = TimeSeriesFrame::new(frame.dates().to_vec())?;
    for col in frame.columns() {
        let values: Vec<Option<f64>> = (0..frame.len())
            .map(|r| {
                col.get(r)
                    .map(|v| stats.get(&col.name).map_or(v, |s| s.apply(v)))
            })
            .collect();
        out.add_optional_column(col.name.clone(), values)?;
    }
    for s in &stats.columns {
        frame.column(&s.name)?;
    }
    Ok(out)
}
