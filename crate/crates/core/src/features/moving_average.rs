use crate::error::{Error, Result};

/// Trailing mean over `window` entries. The first `window - 1` positions have
/// no complete window and are `None`; a window longer than the series
/// yields an all-`None` result.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<Option<f64>>> {
    if window == 0 {
        return Err(Error::Parameter("moving-average window must be >= 1".into()));
    }
    if series.is_empty() {
        return Err(Error::EmptyInput("moving average of an empty series"));
    }
    if window > series.len() {
        log::warn!(
            "moving-average window {window} exceeds series length {}; result is entirely missing",
            series.len()
        );
    }
    Ok((0..series.len())
        .map(|t| {
            (t + 1 >= window).then(|| series[t + 1 - window..=t].iter().sum::<f64>() / window as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let ma = moving_average(&[7.0; 12], 5).unwrap();
        assert!(ma[..4].iter().all(Option::is_none));
        assert!(ma[4..].iter().all(|v| *v == Some(7.0)));
    }

    #[test]
    fn pairs() {
        let ma = moving_average(&[1.0, 2.0, 3.0, 4.0, 5.0], 2).unwrap();
        assert_eq!(ma, vec![None, Some(1.5), Some(2.5), Some(3.5), Some(4.5)]);
    }

    #[test]
    fn unit_window_is_identity() {
        let s = [0.3, -1.0, 4.0];
        let ma = moving_average(&s, 1).unwrap();
        assert_eq!(ma, s.iter().map(|&v| Some(v)).collect::<Vec<_>>());
    }

    #[test]
    fn oversized_window_is_all_missing() {
        let ma = moving_average(&[1.0, 2.0], 3).unwrap();
        assert!(ma.iter().all(Option::is_none));
    }

    #[test]
    fn invalid_arguments() {
        assert!(moving_average(&[1.0], 0).is_err());
        assert!(moving_average(&[], 2).is_err());
    }
}
