//! Ridge-jittered least squares over flattened windows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{SampleRef, SampleSet};
use crate::layers::Mode;
use crate::models::Regressor;
use crate::tensor::{SeededRng, Tensor};

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Input layout: a `[window, seq_features]` sequence plus `statics` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearDims {
    pub window: usize,
    pub seq_features: usize,
    pub statics: usize,
}

impl LinearDims {
    pub fn flat_len(&self) -> usize {
        self.window * self.seq_features + self.statics
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegressionModel {
    pub dims: LinearDims,
    pub weights: Tensor,
    pub bias: Tensor,
    pub ridge: f64,
}

impl LinearRegressionModel {
    pub fn new(dims: LinearDims, weights: Tensor, bias: f64, ridge: f64) -> Result<Self> {
        if weights.shape() != [dims.flat_len()] {
            return Err(Error::dims(weights.shape(), &[dims.flat_len()], "linear weights"));
        }
        Ok(Self {
            dims,
            weights,
            bias: Tensor::new(&[1], vec![bias])?,
            ridge,
        })
    }

    pub fn bias(&self) -> f64 {
        self.bias.data()[0]
    }

    /// `[X_seq row-major ∥ X_static]`.
    pub fn flatten(&self, sample: &SampleRef<'_>) -> Result<Vec<f64>> {
        let want = [self.dims.window, self.dims.seq_features];
        if sample.x_seq.shape() != want {
            return Err(Error::dims(sample.x_seq.shape(), &want, "linear sequence input"));
        }
        if sample.x_static.len() != self.dims.statics {
            return Err(Error::dims(&[sample.x_static.len()], &[self.dims.statics], "linear static input"));
        }
        let mut v = sample.x_seq.data().to_vec();
        v.extend_from_slice(sample.x_static);
        Ok(v)
    }

    fn score(&self, x: &[f64]) -> f64 {
        self.bias() + self.weights.data().iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Sum of squared residuals plus `ridge·‖w‖²`; the intercept is not penalized.
    pub fn ridge_objective(&self, samples: &SampleSet) -> Result<f64> {
        let mut sse = 0.0;
        for s in samples.iter() {
            let r = s.y - self.score(&self.flatten(&s)?);
            sse += r * r;
        }
        let penalty: f64 = self.weights.data().iter().map(|w| w * w).sum();
        Ok(sse + self.ridge * penalty)
    }
}

/// Solves the ridge normal equations on centered data, then recovers the
/// intercept from the means. Equivalent to minimizing
/// `Σ(y − Xw − b)² + λ‖w‖²` over `w` and `b`.
pub fn linreg_fit(samples: &SampleSet, ridge: f64) -> Result<LinearRegressionModel> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: samples.len(),
        });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Parameter(format!("ridge must be finite and non-negative, got {ridge}")));
    }
    let first = samples.get(0);
    let dims = LinearDims {
        window: first.x_seq.rows(),
        seq_features: first.x_seq.cols(),
        statics: first.x_static.len(),
    };
    let probe = LinearRegressionModel::new(dims, Tensor::zeros(&[dims.flat_len()])?, 0.0, ridge)?;
    let n = samples.len();
    let d = dims.flat_len();
    let mut x = DMatrix::<f64>::zeros(n, d);
    for (i, s) in samples.iter().enumerate() {
        let row = probe.flatten(&s)?;
        for (j, v) in row.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    let y = DVector::from_column_slice(&samples.y);
    let x_mean: DVector<f64> = x.row_mean().transpose();
    let y_mean = y.mean();
    for j in 0..d {
        let m = x_mean[j];
        x.column_mut(j).iter_mut().for_each(|v| *v -= m);
    }
    let yc = y.map(|v| v - y_mean);

    let mut gram = x.tr_mul(&x);
    for j in 0..d {
        gram[(j, j)] += ridge;
    }
    let rhs = x.tr_mul(&yc);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical(format!("normal equations are singular ({d} features, {n} samples, ridge {ridge})")))?;
    let w = chol.solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("linear solve produced non-finite weights".into()));
    }
    let bias = y_mean - w.dot(&x_mean);
    LinearRegressionModel::new(dims, Tensor::new(&[d], w.as_slice().to_vec())?, bias, ridge)
}

impl Regressor for LinearRegressionModel {
    type Cache = Vec<f64>;

    fn parameters(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("linear.weights", &self.weights), ("linear.bias", &self.bias)]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weights, &mut self.bias]
    }

    fn forward(&self, sample: SampleRef<'_>, _mode: Mode, _rng: &mut SeededRng) -> Result<(f64, Vec<f64>)> {
        let x = self.flatten(&sample)?;
        Ok((self.score(&x), x))
    }

    fn backward(&self, cache: &Vec<f64>, dscore: f64) -> Result<Vec<Tensor>> {
        if cache.len() != self.dims.flat_len() {
            return Err(Error::Contract("linear cache does not belong to this model".into()));
        }
        Ok(vec![
            Tensor::new(&[cache.len()], cache.iter().map(|v| v * dscore).collect())?,
            Tensor::new(&[1], vec![dscore])?,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_projection;

    fn set_from(rows: &[Vec<f64>], y: &[f64]) -> SampleSet {
        SampleSet {
            x_seq: rows.iter().map(|r| Tensor::new(&[1, r.len()], r.clone()).unwrap()).collect(),
            x_static: vec![Vec::new(); rows.len()],
            y: y.to_vec(),
            ..SampleSet::default()
        }
    }

    fn random_set(seed: u64, n: usize, d: usize, noise: f64) -> SampleSet {
        let mut rng = SeededRng::new(seed);
        let truth: Vec<f64> = (0..d).map(|_| rng.normal(0.0, 1.0)).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.normal(0.0, 1.0)).collect()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 0.5 + r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + rng.normal(0.0, noise))
            .collect();
        set_from(&rows, &y)
    }

    #[test]
    fn recovers_planted_line() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.37 - 2.0]).collect();
        let y: Vec<f64> = xs.iter().map(|r| 2.0 * r[0] + 3.0).collect();
        let m = linreg_fit(&set_from(&xs, &y), DEFAULT_RIDGE).unwrap();
        assert!((m.weights.data()[0] - 2.0).abs() < 1e-6);
        assert!((m.bias() - 3.0).abs() < 1e-6);
    }

    #[test]
    fn constant_target_gives_intercept_only() {
        let set = random_set(4, 30, 3, 0.0);
        let set = SampleSet { y: vec![1.25; 30], ..set };
        let m = linreg_fit(&set, DEFAULT_RIDGE).unwrap();
        assert!(m.weights.data().iter().all(|w| w.abs() < 1e-6));
        assert!((m.bias() - 1.25).abs() < 1e-6);
    }

    #[test]
    fn beats_gradient_descent_fit() {
        let set = random_set(9, 60, 4, 0.3);
        let m = linreg_fit(&set, DEFAULT_RIDGE).unwrap();
        let mse = |w: &[f64], b: f64| -> f64 {
            set.iter()
                .map(|s| {
                    let p = b + s.x_seq.data().iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
                    (s.y - p).powi(2)
                })
                .sum::<f64>()
                / set.len() as f64
        };
        let (mut w, mut b) = (vec![0.0; 4], 0.0);
        for _ in 0..5000 {
            let mut gw = vec![0.0; 4];
            let mut gb = 0.0;
            for s in set.iter() {
                let x = s.x_seq.data();
                let r = b + x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() - s.y;
                gb += 2.0 * r / set.len() as f64;
                for j in 0..4 {
                    gw[j] += 2.0 * r * x[j] / set.len() as f64;
                }
            }
            b -= 0.05 * gb;
            w.iter_mut().zip(&gw).for_each(|(v, g)| *v -= 0.05 * g);
        }
        assert!(mse(m.weights.data(), m.bias()) <= mse(&w, b) + 1e-6);
    }

    #[test]
    fn perturbations_never_lower_objective() {
        let set = random_set(12, 80, 5, 0.5);
        let m = linreg_fit(&set, DEFAULT_RIDGE).unwrap();
        let best = m.ridge_objective(&set).unwrap();
        let mut rng = SeededRng::new(13);
        for _ in 0..200 {
            let delta = random_projection(&mut rng, 5);
            let norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut probe = m.clone();
            probe.weights.data_mut().iter_mut().zip(&delta).for_each(|(w, d)| *w += 1e-3 * d / norm);
            assert!(probe.ridge_objective(&set).unwrap() >= best);
        }
    }

    #[test]
    fn singular_system_without_jitter_is_numerical_error() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(linreg_fit(&set_from(&xs, &y), 0.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn gradient_is_input_times_upstream() {
        let set = random_set(1, 10, 3, 0.1);
        let m = linreg_fit(&set, DEFAULT_RIDGE).unwrap();
        let (_, cache) = m.forward(set.get(0), Mode::Train, &mut SeededRng::new(0)).unwrap();
        let g = m.backward(&cache, 2.0).unwrap();
        for (a, b) in g[0].data().iter().zip(set.get(0).x_seq.data()) {
            assert_eq!(*a, 2.0 * b);
        }
        assert_eq!(g[1].data(), &[2.0]);
    }

    #[test]
    fn too_few_samples() {
        let set = random_set(1, 1, 2, 0.0);
        assert!(matches!(linreg_fit(&set, DEFAULT_RIDGE), Err(Error::InsufficientData { .. })));
    }
}
