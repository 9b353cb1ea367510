//! Shared fixtures for the benchmarks.

use riskcast_core::data_io::{synth_generate, SynthConfig};
use riskcast_core::pipeline::{prepare, PipelineConfig, PreparedData};
use riskcast_core::tensor::Distribution;
use riskcast_core::{SeededRng, Tensor};

pub fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Tensor {
    Tensor::random(rng, &[rows, cols], Distribution::Normal { mean: 0.0, std_dev: 1.0 }).expect("valid shape")
}

/// Features and split for a synthetic series of `days` business days.
pub fn prepared(days: usize) -> PreparedData {
    let bundle = synth_generate(&SynthConfig {
        n_days: days,
        ..Default::default()
    })
    .expect("valid generator config");
    prepare(&bundle, &PipelineConfig::default()).expect("enough data")
}
