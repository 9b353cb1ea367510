use log::info;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::SampleSet;
use crate::models::Regressor;
use crate::training::{fit, GridPoint, TrainConfig, TrainLog};

#[derive(Debug, Clone, PartialEq)]
pub struct GridTrial {
    pub point: GridPoint,
    pub best_val_mse: f64,
    pub epochs_run: usize,
    pub log: TrainLog,
}

#[derive(Debug, Clone)]
pub struct GridOutcome<M> {
    pub config: TrainConfig,
    pub model: M,
    pub log: TrainLog,
    /// One entry per grid point, in grid order.
    pub trials: Vec<GridTrial>,
}

/// Trains one model per grid point (in parallel) and keeps the one with the
/// lowest validation MSE. Ties go to the earliest point in grid order.
pub fn grid_search<M, F>(factory: F, train: &SampleSet, val: &SampleSet, cfg: &TrainConfig) -> Result<GridOutcome<M>>
where
    M: Regressor,
    F: Fn(&TrainConfig) -> Result<M> + Sync,
{
    if cfg.grid.is_empty() {
        return Err(Error::Parameter("grid search needs at least one grid point".into()));
    }
    let runs: Vec<(TrainConfig, M, TrainLog)> = cfg
        .grid
        .par_iter()
        .map(|point| {
            let point_cfg = cfg.at(point);
            let model = factory(&point_cfg)?;
            let (model, log) = fit(model, train, val, &point_cfg)?;
            Ok((point_cfg, model, log))
        })
        .collect::<Result<_>>()?;

    let trials: Vec<GridTrial> = cfg
        .grid
        .iter()
        .zip(&runs)
        .map(|(point, (_, _, log))| GridTrial {
            point: *point,
            best_val_mse: log.best_val_mse().unwrap_or(f64::INFINITY),
            epochs_run: log.epochs.len(),
            log: log.clone(),
        })
        .collect();
    for t in &trials {
        info!(
            "grid point lr={} hidden={}: best val mse {} after {} epochs",
            t.point.learning_rate, t.point.hidden_size, t.best_val_mse, t.epochs_run
        );
    }
    let mut best = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.best_val_mse < trials[best].best_val_mse {
            best = i;
        }
    }
    let (config, model, log) = runs.into_iter().nth(best).expect("index within grid");
    Ok(GridOutcome { config, model, log, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinearDims, LinearRegressionModel};
    use crate::tensor::{SeededRng, Tensor};

    fn data(seed: u64, n: usize) -> SampleSet {
        let mut rng = SeededRng::new(seed);
        let mut set = SampleSet::default();
        for _ in 0..n {
            let x: Vec<f64> = (0..2).map(|_| rng.normal(0.0, 1.0)).collect();
            set.y.push(1.0 + x[0] - 2.0 * x[1] + rng.normal(0.0, 0.1));
            set.x_seq.push(Tensor::new(&[1, 2], x).unwrap());
            set.x_static.push(Vec::new());
        }
        set
    }

    fn factory(_: &TrainConfig) -> Result<LinearRegressionModel> {
        let dims = LinearDims {
            window: 1,
            seq_features: 2,
            statics: 0,
        };
        LinearRegressionModel::new(dims, Tensor::zeros(&[2])?, 0.0, 0.0)
    }

    fn cfg(lrs: &[f64]) -> TrainConfig {
        TrainConfig {
            max_epochs: 40,
            patience: 5,
            grid: lrs.iter().map(|&learning_rate| GridPoint { learning_rate, hidden_size: 1 }).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn empty_grid_is_parameter_error() {
        let set = data(1, 20);
        assert!(matches!(grid_search(factory, &set, &set, &cfg(&[])), Err(Error::Parameter(_))));
    }

    #[test]
    fn singleton_grid_equals_fit() {
        let (train, val) = (data(1, 64), data(2, 16));
        let c = cfg(&[0.01]);
        let out = grid_search(factory, &train, &val, &c).unwrap();
        let (m, log) = fit(factory(&c).unwrap(), &train, &val, &c.at(&c.grid[0])).unwrap();
        assert_eq!(out.model, m);
        assert_eq!(out.log, log);
    }

    #[test]
    fn divergent_rate_loses() {
        use crate::models::{HybridConfig, HybridDims, HybridModel};
        use crate::tensor::Distribution;
        let dims = HybridDims {
            window: 5,
            market: 2,
            sentiment: 2,
            statics: 1,
        };
        let make = |seed: u64, n: usize| {
            let mut rng = SeededRng::new(seed);
            let mut set = SampleSet::default();
            for _ in 0..n {
                let x = Tensor::random(&mut rng, &[5, 4], Distribution::Normal { mean: 0.0, std_dev: 1.0 }).unwrap();
                let signal = x.data().iter().step_by(4).sum::<f64>() / 5.0;
                set.y.push(0.5 + 0.3 * signal.tanh());
                set.x_seq.push(x);
                set.x_static.push(vec![rng.normal(0.0, 1.0)]);
            }
            set
        };
        let (train, val) = (make(3, 128), make(4, 32));
        let factory = |c: &TrainConfig| {
            let cfg = HybridConfig {
                hidden: c.hidden_size,
                dropout: c.dropout_p,
                ..HybridConfig::default()
            };
            HybridModel::new(dims, &cfg, &mut SeededRng::new(c.seed))
        };
        let c = TrainConfig {
            max_epochs: 80,
            batch_size: 8,
            grid: [1e-3, 10.0].map(|learning_rate| GridPoint { learning_rate, hidden_size: 4 }).to_vec(),
            ..Default::default()
        };
        let out = grid_search(factory, &train, &val, &c).unwrap();
        assert_eq!(out.config.learning_rate, 1e-3, "{:?}", out.trials);
    }

    #[test]
    fn order_only_matters_for_ties() {
        let (train, val) = (data(5, 64), data(6, 16));
        let a = grid_search(factory, &train, &val, &cfg(&[0.003, 0.03, 0.3])).unwrap();
        let b = grid_search(factory, &train, &val, &cfg(&[0.3, 0.003, 0.03])).unwrap();
        assert_eq!(a.config.learning_rate, b.config.learning_rate);
        assert_eq!(a.model, b.model);
        // Identical points tie; the first one wins.
        let t = grid_search(factory, &train, &val, &cfg(&[0.01, 0.01])).unwrap();
        assert_eq!(t.trials[0].best_val_mse, t.trials[1].best_val_mse);
    }
}
