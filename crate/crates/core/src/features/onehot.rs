use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::features::TimeSeriesFrame;

pub fn one_hot_column(category: &str) -> String {
    format!("policy_{category}")
}

/// One 0/1 column per vocabulary entry (named `policy_<category>`), laid out
/// on `calendar`. An event dated between calendar days lands on the next
/// calendar day; events after the last one are dropped. Several distinct
/// events on one day set several columns.
pub fn one_hot_encode(
    events: &[(NaiveDate, String)],
    vocabulary: &[String],
    calendar: &[NaiveDate],
) -> Result<TimeSeriesFrame> {
    if vocabulary.is_empty() {
        return Err(Error::Parameter("one-hot vocabulary is empty".into()));
    }
    let mut cols = vec![vec![0.0; calendar.len()]; vocabulary.len()];
    for (date, category) in events {
        let idx = vocabulary.iter().position(|v| v == category).ok_or_else(|| {
            Error::Schema(format!("unknown policy category `{category}` on {date}"))
        })?;
        let row = calendar.partition_point(|d| d < date);
        if row < calendar.len() {
            cols[idx][row] = 1.0;
        }
    }
    let mut frame = TimeSeriesFrame::new(calendar.to_vec())?;
    for (cat, values) in vocabulary.iter().zip(cols) {
        frame.add_column(one_hot_column(cat), values)?;
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn vocab() -> Vec<String> {
        ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect()
    }

    fn row(f: &TimeSeriesFrame, r: usize) -> Vec<f64> {
        f.columns().iter().map(|c| c.values[r]).collect()
    }

    #[test]
    fn single_and_absent_rows() {
        let cal = [d("2022-03-01"), d("2022-03-02")];
        let f = one_hot_encode(&[(d("2022-03-01"), "c".into())], &vocab(), &cal).unwrap();
        assert_eq!(row(&f, 0), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(row(&f, 1), vec![0.0; 4]);
    }

    #[test]
    fn two_events_same_day() {
        let cal = [d("2022-03-01")];
        let events = [(d("2022-03-01"), "a".to_string()), (d("2022-03-01"), "d".to_string())];
        let f = one_hot_encode(&events, &vocab(), &cal).unwrap();
        let mut expected = vec![0.0; 4];
        for (_, c) in &events {
            expected[vocab().iter().position(|v| v == c).unwrap()] = 1.0;
        }
        assert_eq!(row(&f, 0), expected);
    }

    #[test]
    fn weekend_event_moves_to_next_day() {
        let cal = [d("2022-03-04"), d("2022-03-07")];
        let f = one_hot_encode(&[(d("2022-03-05"), "b".into())], &vocab(), &cal).unwrap();
        assert_eq!(row(&f, 1), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn unknown_category_names_category_and_date() {
        let err = one_hot_encode(&[(d("2022-03-01"), "zzz".into())], &vocab(), &[d("2022-03-01")]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("zzz") && msg.contains("2022-03-01"), "{msg}");
        assert!(one_hot_encode(&[], &[], &[d("2022-03-01")]).is_err());
    }
}
