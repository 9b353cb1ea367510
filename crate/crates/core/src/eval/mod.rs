//! Test-set metrics and side-by-side model comparison.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::mean_squared_error;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(Error::Contract(format!(
            "metric inputs must be non-empty and equal length (got {} and {})",
            y.len(),
            yhat.len()
        )));
    }
    Ok(())
}

/// Same definition as the training loss.
pub fn compute_mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    mean_squared_error(y, yhat)
}

/// Fraction of samples where target and prediction fall on the same side of
/// `threshold` (a value strictly above it counts as high risk).
pub fn compute_accuracy(y: &[f64], yhat: &[f64], threshold: f64) -> Result<f64> {
    check_pair(y, yhat)?;
    let hits = y.iter().zip(yhat).filter(|(a, b)| (**a > threshold) == (**b > threshold)).count();
    Ok(hits as f64 / y.len() as f64)
}

/// `1 − SS_res / SS_tot`.
pub fn compute_r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    if y.len() < 2 {
        return Err(Error::UndefinedR2);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedR2);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: f64,
    pub accuracy: f64,
    pub r2: f64,
    pub n: usize,
    pub threshold: f64,
}

impl EvalReport {
    pub fn compute(y: &[f64], yhat: &[f64], threshold: f64) -> Result<Self> {
        Ok(Self {
            mse: compute_mse(y, yhat)?,
            accuracy: compute_accuracy(y, yhat, threshold)?,
            r2: compute_r2(y, yhat)?,
            n: y.len(),
            threshold,
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "samples    {}\nthreshold  {}\nmse        {:.6}\naccuracy   {:.4}\nr2         {:.4}\n",
            self.n, self.threshold, self.mse, self.accuracy, self.r2
        )
    }
}

/// Which rows hold the best value of a metric; more than one entry is a tie.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Winners {
    pub mse: Vec<String>,
    pub accuracy: Vec<String>,
    pub r2: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<(String, EvalReport)>,
    pub winners: Winners,
}

fn best_rows(rows: &[(String, EvalReport)], metric: impl Fn(&EvalReport) -> f64, lower_is_better: bool) -> Vec<String> {
    let key = |r: &EvalReport| if lower_is_better { -metric(r) } else { metric(r) };
    let best = rows.iter().map(|(_, r)| key(r)).fold(f64::NEG_INFINITY, f64::max);
    rows.iter().filter(|(_, r)| key(r) == best).map(|(n, _)| n.clone()).collect()
}

/// Rows are sorted by name so the report does not depend on input order.
pub fn compare_models(reports: &[(String, EvalReport)]) -> Result<ComparisonReport> {
    if reports.len() < 2 {
        return Err(Error::Contract(format!("comparison needs at least two models, got {}", reports.len())));
    }
    let n = reports[0].1.n;
    if let Some((name, r)) = reports.iter().find(|(_, r)| r.n != n) {
        return Err(Error::Contract(format!(
            "models were evaluated on different sample counts ({} has {}, expected {n})",
            name, r.n
        )));
    }
    let mut rows = reports.to_vec();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let winners = Winners {
        mse: best_rows(&rows, |r| r.mse, true),
        accuracy: best_rows(&rows, |r| r.accuracy, false),
        r2: best_rows(&rows, |r| r.r2, false),
    };
    Ok(ComparisonReport { rows, winners })
}

impl ComparisonReport {
    fn winner_label(names: &[String]) -> String {
        match names {
            [one] => one.clone(),
            many => format!("tie ({})", many.join(", ")),
        }
    }

    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("Model".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>10}  {:>9}  {:>8}", "Model", "MSE", "Accuracy", "R²");
        for (name, r) in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>10.6}  {:>8.2}%  {:>8.4}",
                name,
                r.mse,
                r.accuracy * 100.0,
                r.r2
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "best MSE:      {}", Self::winner_label(&self.winners.mse));
        let _ = writeln!(out, "best accuracy: {}", Self::winner_label(&self.winners.accuracy));
        let _ = writeln!(out, "best R²:       {}", Self::winner_label(&self.winners.r2));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,mse,accuracy,r2\n");
        for (name, r) in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", name, r.mse, r.accuracy, r.r2);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::SeededRng;
    use crate::training::mse_loss;

    #[test]
    fn worked_examples() {
        assert_eq!(compute_mse(&[1.0, 2.0], &[0.0, 2.0]).unwrap(), 0.5);
        assert_eq!(compute_r2(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(compute_accuracy(&[0.2, 0.8], &[0.6, 0.9], 0.5).unwrap(), 0.5);
        assert_eq!(compute_r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(compute_mse(&[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn mse_shares_training_definition() {
        let mut rng = SeededRng::new(1);
        let y: Vec<f64> = (0..50).map(|_| rng.next_f64()).collect();
        let p: Vec<f64> = (0..50).map(|_| rng.next_f64()).collect();
        assert_eq!(compute_mse(&y, &p).unwrap().to_bits(), mse_loss(&y, &p).unwrap().0.to_bits());
    }

    #[test]
    fn accuracy_depends_only_on_side_of_threshold() {
        let y = [0.1, 0.2, 0.3];
        assert_eq!(compute_accuracy(&y, &[0.45, -3.0, 0.0], 0.5).unwrap(), 1.0);
        let yhat = [0.9, 0.1, 0.7, 0.4];
        let y = [0.8, 0.3, 0.2, 0.6];
        let a = compute_accuracy(&y, &yhat, 0.5).unwrap();
        let warped: Vec<f64> = yhat.iter().map(|v| 0.5 + (v - 0.5).powi(3) * 10.0).collect();
        assert_eq!(a, compute_accuracy(&y, &warped, 0.5).unwrap());
    }

    #[test]
    fn r2_errors() {
        assert!(matches!(compute_r2(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::UndefinedR2)));
        assert!(matches!(compute_r2(&[1.0], &[1.0]), Err(Error::UndefinedR2)));
        assert!(compute_r2(&[1.0], &[1.0, 2.0]).is_err());
        assert!(compute_accuracy(&[], &[], 0.5).is_err());
    }

    #[test]
    fn mean_predictor_r2_is_zero() {
        let y = [0.5, 1.5, 4.0, -2.0];
        let mean = y.iter().sum::<f64>() / 4.0;
        assert_eq!(compute_r2(&y, &[mean; 4]).unwrap(), 0.0);
    }

    fn report(mse: f64, accuracy: f64, r2: f64) -> EvalReport {
        EvalReport {
            mse,
            accuracy,
            r2,
            n: 100,
            threshold: 0.5,
        }
    }

    #[test]
    fn published_style_comparison() {
        let rows = vec![
            ("hybrid".to_string(), report(0.012, 0.924, 0.89)),
            ("linreg".to_string(), report(0.034, 0.781, 0.72)),
        ];
        let c = compare_models(&rows).unwrap();
        let h = vec!["hybrid".to_string()];
        assert_eq!(c.winners, Winners { mse: h.clone(), accuracy: h.clone(), r2: h });
        assert_eq!(c.to_csv().lines().count(), 3);
        assert!(c.to_table().contains("best MSE:      hybrid"));
    }

    #[test]
    fn identical_reports_tie() {
        let rows = vec![("a".to_string(), report(0.1, 0.5, 0.2)), ("b".to_string(), report(0.1, 0.5, 0.2))];
        let c = compare_models(&rows).unwrap();
        assert_eq!(c.winners.mse.len(), 2);
        assert_eq!(c.winners.accuracy.len(), 2);
        assert_eq!(c.winners.r2.len(), 2);
        assert!(c.to_table().contains("tie (a, b)"));
    }

    #[test]
    fn input_order_does_not_matter() {
        let rows = vec![
            ("x".to_string(), report(0.2, 0.6, 0.1)),
            ("y".to_string(), report(0.1, 0.7, 0.3)),
            ("z".to_string(), report(0.3, 0.7, 0.2)),
        ];
        let mut rev = rows.clone();
        rev.reverse();
        assert_eq!(compare_models(&rows).unwrap(), compare_models(&rev).unwrap());
    }

    #[test]
    fn mismatched_counts_rejected() {
        let mut b = report(0.1, 0.5, 0.2);
        b.n = 99;
        let rows = vec![("a".to_string(), report(0.1, 0.5, 0.2)), ("b".to_string(), b)];
        assert!(matches!(compare_models(&rows), Err(Error::Contract(_))));
        assert!(compare_models(&rows[..1]).is_err());
    }
}
