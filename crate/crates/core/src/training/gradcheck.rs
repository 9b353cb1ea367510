use crate::error::{Error, Result};
use crate::features::SampleRef;
use crate::layers::Mode;
use crate::models::Regressor;
use crate::tensor::SeededRng;

pub const MAX_CHECKED_PARAMS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    /// Test hook: parameters whose name starts with this prefix get a
    /// deliberately wrong analytic gradient, so the harness can be shown to fail.
    pub corrupt: Option<String>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_parameter: &'static str,
    pub worst_index: usize,
    pub checked: usize,
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Compares analytic gradients of `L = (y − ŷ)²` against central differences
/// for every parameter entry. Runs in infer mode so the loss is deterministic.
pub fn gradient_check<M: Regressor>(model: &M, sample: SampleRef<'_>, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {}", opts.epsilon)));
    }
    let total: usize = model.parameters().iter().map(|(_, p)| p.len()).sum();
    if total >= MAX_CHECKED_PARAMS {
        return Err(Error::Parameter(format!(
            "gradient check is limited to fewer than {MAX_CHECKED_PARAMS} parameters, model has {total}"
        )));
    }
    let mut rng = SeededRng::new(0);
    let (score, cache) = model.forward(sample, Mode::Infer, &mut rng)?;
    if !score.is_finite() {
        return Err(Error::Numerical(format!("non-finite model output {score}")));
    }
    let mut analytic = model.backward(&cache, -2.0 * (sample.y - score))?;
    let names: Vec<&'static str> = model.parameters().iter().map(|(n, _)| *n).collect();
    if let Some(prefix) = &opts.corrupt {
        let mut hit = false;
        for (g, name) in analytic.iter_mut().zip(&names) {
            if name.starts_with(prefix.as_str()) {
                hit = true;
                g.data_mut().iter_mut().for_each(|v| *v = *v * 1.5 + 0.1);
            }
        }
        if !hit {
            return Err(Error::Parameter(format!("no parameter matches '{prefix}'; have {names:?}")));
        }
    }

    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_parameter: names.first().copied().unwrap_or(""),
        worst_index: 0,
        checked: 0,
    };
    for (p, name) in names.iter().enumerate() {
        for i in 0..analytic[p].len() {
            let orig = probe.parameters_mut()[p].data()[i];
            probe.parameters_mut()[p].data_mut()[i] = orig + opts.epsilon;
            let plus = probe.predict(sample)?;
            probe.parameters_mut()[p].data_mut()[i] = orig - opts.epsilon;
            let minus = probe.predict(sample)?;
            probe.parameters_mut()[p].data_mut()[i] = orig;
            if !(plus.is_finite() && minus.is_finite()) {
                return Err(Error::Numerical(format!("non-finite loss when perturbing {name}[{i}]")));
            }
            // (y − ŷ₊)² − (y − ŷ₋)² factored to avoid cancelling two squares.
            let numeric = (plus - minus) * (plus + minus - 2.0 * sample.y) / (2.0 * opts.epsilon);
            let err = relative_error(analytic[p].data()[i], numeric);
            if err > report.max_rel_error || err.is_nan() {
                report.max_rel_error = err;
                report.worst_parameter = name;
                report.worst_index = i;
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
