use crate::error::{Error, Result};
use crate::features::TimeSeriesFrame;

/// How a secondary source fills base dates it has no row for.
#[derive(Debug, Clone, PartialEq)]
pub enum FillRule {
    /// Most recent value on or before the date; rows before the source's
    /// first observation are dropped.
    ForwardFill,
    /// One constant per column, in column order.
    Constant(Vec<f64>),
    Zero,
}

/// Joins `sources` onto the dates of `base`. Base dates for which a
/// forward-filled source has no prior observation are dropped.
pub fn align_by_date(base: &TimeSeriesFrame, sources: &[(&TimeSeriesFrame, FillRule)]) -> Result<TimeSeriesFrame> {
    let dates = base.dates();
    let mut keep = vec![true; dates.len()];
    // Resolved source row (if any) per base row, per source.
    let mut lookups: Vec<Vec<Option<usize>>> = Vec::with_capacity(sources.len());
    for (frame, rule) in sources {
        if let FillRule::Constant(values) = rule {
            if values.len() != frame.columns().len() {
                return Err(Error::dims(&[values.len()], &[frame.columns().len()], "fill constants per column"));
            }
        }
        let rows: Vec<Option<usize>> = dates
            .iter()
            .map(|d| match rule {
                FillRule::ForwardFill => frame.dates().partition_point(|s| s <= d).checked_sub(1),
                _ => frame.position(*d),
            })
            .collect();
        if matches!(rule, FillRule::ForwardFill) {
            for (k, r) in keep.iter_mut().zip(&rows) {
                *k &= r.is_some();
            }
        }
        lookups.push(rows);
    }

    let kept: Vec<usize> = (0..dates.len()).filter(|&i| keep[i]).collect();
    if kept.is_empty() {
        let range = |f: &TimeSeriesFrame| match (f.dates().first(), f.dates().last()) {
            (Some(a), Some(b)) => format!("{a}..{b}"),
            _ => "empty".to_string(),
        };
        let mut msg = format!("no common dates; base covers {}", range(base));
        for (i, (f, _)) in sources.iter().enumerate() {
            msg.push_str(&format!(", source {i} covers {}", range(f)));
        }
        return Err(Error::Alignment(msg));
    }

    let mut out = TimeSeriesFrame::new(kept.iter().map(|&i| dates[i]).collect())?;
    for col in base.columns() {
        out.add_optional_column(col.name.clone(), kept.iter().map(|&i| col.get(i)).collect())?;
    }
    for ((frame, rule), rows) in sources.iter().zip(&lookups) {
        for (c, col) in frame.columns().iter().enumerate() {
            let fill = match rule {
                FillRule::Constant(v) => Some(v[c]),
                FillRule::Zero => Some(0.0),
                FillRule::ForwardFill => None,
            };
            let values = kept
                .iter()
                .map(|&i| match rows[i] {
                    Some(r) => col.get(r),
                    None => fill,
                })
                .collect();
            out.add_optional_column(col.name.clone(), values)?;
        }
    }
    Ok(out)
}
