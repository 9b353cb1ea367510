use crate::error::{Error, Result};

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Contract("loss over zero samples".into()));
    }
    if y.len() != yhat.len() {
        return Err(Error::Contract(format!(
            "target length {} differs from prediction length {}",
            y.len(),
            yhat.len()
        )));
    }
    Ok(())
}

/// `(1/N) Σ (y_i - ŷ_i)²`. This is the single definition shared by training
/// and evaluation.
pub fn mean_squared_error(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let sum: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / y.len() as f64)
}

/// MSE and its gradient with respect to the predictions,
/// `dL/dŷ_i = -2 (y_i - ŷ_i) / N`.
pub fn mse_loss(y: &[f64], yhat: &[f64]) -> Result<(f64, Vec<f64>)> {
    let loss = mean_squared_error(y, yhat)?;
    let n = y.len() as f64;
    let grad = y.iter().zip(yhat).map(|(a, b)| -2.0 * (a - b) / n).collect();
    Ok((loss, grad))
}
