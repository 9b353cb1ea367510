use std::ops::Range;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::features::TimeSeriesFrame;
use crate::tensor::Tensor;

/// Windowed samples: a `[T, F_seq]` sequence, a static vector and a scalar
/// target per sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    pub x_seq: Vec<Tensor>,
    pub x_static: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Last day covered by each window; the prediction is made on this day.
    pub dates: Vec<NaiveDate>,
    /// Day the target value is read from.
    pub target_dates: Vec<NaiveDate>,
    pub seq_columns: Vec<String>,
    pub static_columns: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct SampleRef<'a> {
    pub x_seq: &'a Tensor,
    pub x_static: &'a [f64],
    pub y: f64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn get(&self, i: usize) -> SampleRef<'_> {
        SampleRef {
            x_seq: &self.x_seq[i],
            x_static: &self.x_static[i],
            y: self.y[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = SampleRef<'_>> {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn slice(&self, range: Range<usize>) -> SampleSet {
        SampleSet {
            x_seq: self.x_seq[range.clone()].to_vec(),
            x_static: self.x_static[range.clone()].to_vec(),
            y: self.y[range.clone()].to_vec(),
            dates: self.dates[range.clone()].to_vec(),
            target_dates: self.target_dates[range].to_vec(),
            seq_columns: self.seq_columns.clone(),
            static_columns: self.static_columns.clone(),
        }
    }

    pub fn window(&self) -> Option<usize> {
        self.x_seq.first().map(Tensor::rows)
    }

    /// Checks that every window ends strictly before its target date.
    pub fn check_no_lookahead(&self) -> Result<()> {
        for (i, (end, target)) in self.dates.iter().zip(&self.target_dates).enumerate() {
            if end >= target {
                return Err(Error::Contract(format!(
                    "sample {i}: window ends {end} but target is measured {target}"
                )));
            }
        }
        Ok(())
    }
}

/// One sample per admissible end row `t` (stride 1): rows `t-T+1 ..= t` of
/// `seq_cols`, row `t` of `static_cols`, and `target_col` at `t + horizon`.
pub fn build_windows(
    aligned: &TimeSeriesFrame,
    seq_cols: &[&str],
    static_cols: &[&str],
    target_col: &str,
    window: usize,
    horizon: usize,
) -> Result<SampleSet> {
    if window == 0 || horizon == 0 {
        return Err(Error::Parameter("window and horizon must be >= 1".into()));
    }
    if seq_cols.is_empty() {
        return Err(Error::Parameter("at least one sequence column is required".into()));
    }
    let rows = aligned.len();
    if rows < window + horizon {
        return Err(Error::InsufficientData {
            needed: window + horizon,
            available: rows,
        });
    }
    let seq: Vec<_> = seq_cols.iter().map(|c| aligned.column(c)).collect::<Result<_>>()?;
    let stat: Vec<_> = static_cols.iter().map(|c| aligned.column(c)).collect::<Result<_>>()?;
    let target = aligned.column(target_col)?;
    let missing = |c: &crate::features::Column, r: usize| -> Result<f64> {
        c.get(r).ok_or_else(|| {
            Error::Contract(format!("column `{}` is missing a value on {}", c.name, aligned.dates()[r]))
        })
    };

    let n = rows - window - horizon + 1;
    let mut out = SampleSet {
        seq_columns: seq_cols.iter().map(|s| s.to_string()).collect(),
        static_columns: static_cols.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    };
    for t in window - 1..window - 1 + n {
        let mut data = Vec::with_capacity(window * seq.len());
        for r in t + 1 - window..=t {
            for c in &seq {
                data.push(missing(c, r)?);
            }
        }
        out.x_seq.push(Tensor::new(&[window, seq.len()], data)?);
        out.x_static.push(stat.iter().map(|c| missing(c, t)).collect::<Result<_>>()?);
        out.y.push(missing(target, t + horizon)?);
        out.dates.push(aligned.dates()[t]);
        out.target_dates.push(aligned.dates()[t + horizon]);
    }
    Ok(out)
}
