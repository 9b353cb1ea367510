//! The hybrid conv/LSTM regressor, the linear baseline, and batch prediction.

mod hybrid;
mod linreg;

use chrono::NaiveDate;

pub use hybrid::{HybridCache, HybridConfig, HybridDims, HybridGrads, HybridModel};
pub use linreg::{linreg_fit, LinearDims, LinearRegressionModel, DEFAULT_RIDGE};

use crate::error::{Error, Result};
use crate::features::{SampleRef, SampleSet};
use crate::layers::Mode;
use crate::tensor::{SeededRng, Tensor};

/// A scalar regressor with flat access to its parameters, as needed by the
/// optimizer and the gradient checker.
pub trait Regressor: Clone + Send + Sync {
    type Cache: Send + Sync;

    /// Named parameters in a fixed order; gradients from `backward` follow it.
    fn parameters(&self) -> Vec<(&'static str, &Tensor)>;
    fn parameters_mut(&mut self) -> Vec<&mut Tensor>;
    fn forward(&self, sample: SampleRef<'_>, mode: Mode, rng: &mut SeededRng) -> Result<(f64, Self::Cache)>;
    fn backward(&self, cache: &Self::Cache, dscore: f64) -> Result<Vec<Tensor>>;

    fn predict(&self, sample: SampleRef<'_>) -> Result<f64> {
        // Infer mode never draws from the generator.
        let mut rng = SeededRng::new(0);
        Ok(self.forward(sample, Mode::Infer, &mut rng)?.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Hybrid(HybridModel),
    Linear(LinearRegressionModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Hybrid(_) => "hybrid",
            Model::Linear(_) => "linreg",
        }
    }

    pub fn predict(&self, sample: SampleRef<'_>) -> Result<f64> {
        match self {
            Model::Hybrid(m) => m.predict(sample),
            Model::Linear(m) => m.predict(sample),
        }
    }

    pub fn parameters(&self) -> Vec<(&'static str, &Tensor)> {
        match self {
            Model::Hybrid(m) => m.parameters(),
            Model::Linear(m) => m.parameters(),
        }
    }

    /// `(window, sequence features, static features)` the model expects.
    pub fn input_dims(&self) -> (usize, usize, usize) {
        match self {
            Model::Hybrid(m) => (m.dims.window, m.dims.market + m.dims.sentiment, m.dims.statics),
            Model::Linear(m) => (m.dims.window, m.dims.seq_features, m.dims.statics),
        }
    }

    pub fn check_inputs(&self, samples: &SampleSet) -> Result<()> {
        let (t, f, s) = self.input_dims();
        match samples.x_seq.first().zip(samples.x_static.first()) {
            Some((x, st)) if x.shape() != [t, f] || st.len() != s => Err(Error::Contract(format!(
                "{} model expects windows [{t}, {f}] with {s} static features, data has [{}, {}] with {}",
                self.kind(),
                x.rows(),
                x.cols(),
                st.len()
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub risk_score: f64,
    pub sample_date: NaiveDate,
}

/// Infer-mode score for every sample, in input order.
pub fn predict_batch(model: &Model, samples: &SampleSet) -> Result<Vec<Prediction>> {
    model.check_inputs(samples)?;
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let risk_score = model.predict(s)?;
            if !risk_score.is_finite() {
                return Err(Error::Numerical(format!("non-finite prediction for sample {i}")));
            }
            let sample_date = *samples
                .dates
                .get(i)
                .ok_or_else(|| Error::Contract(format!("sample {i} has no date")))?;
            Ok(Prediction { risk_score, sample_date })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize, rng: &mut SeededRng) -> SampleSet {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        SampleSet {
            x_seq: (0..n)
                .map(|_| Tensor::random(rng, &[4, 5], crate::tensor::Distribution::Normal { mean: 0.0, std_dev: 1.0 }).unwrap())
                .collect(),
            x_static: (0..n).map(|_| vec![rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)]).collect(),
            y: vec![0.0; n],
            dates: (0..n).map(|i| start + chrono::Days::new(i as u64)).collect(),
            target_dates: (0..n).map(|i| start + chrono::Days::new(i as u64 + 1)).collect(),
            ..SampleSet::default()
        }
    }

    fn hybrid(rng: &mut SeededRng) -> Model {
        let dims = HybridDims {
            window: 4,
            market: 2,
            sentiment: 3,
            statics: 2,
        };
        Model::Hybrid(HybridModel::new(dims, &HybridConfig::default(), rng).unwrap())
    }

    #[test]
    fn empty_batch() {
        let mut rng = SeededRng::new(1);
        let m = hybrid(&mut rng);
        assert!(predict_batch(&m, &SampleSet::default()).unwrap().is_empty());
    }

    #[test]
    fn batch_equals_per_sample() {
        let mut rng = SeededRng::new(2);
        let m = hybrid(&mut rng);
        let set = samples(7, &mut rng);
        let preds = predict_batch(&m, &set).unwrap();
        for (i, p) in preds.iter().enumerate() {
            assert_eq!(p.risk_score.to_bits(), m.predict(set.get(i)).unwrap().to_bits());
            assert_eq!(p.sample_date, set.dates[i]);
        }
    }

    #[test]
    fn mismatched_dims_rejected() {
        let mut rng = SeededRng::new(3);
        let m = hybrid(&mut rng);
        let mut set = samples(2, &mut rng);
        set.x_static = vec![vec![0.0]; 2];
        assert!(matches!(predict_batch(&m, &set), Err(Error::Contract(_))));
    }
}
