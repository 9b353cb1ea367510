//! From a [`DatasetBundle`] to standardized, windowed, split samples, and the
//! state needed to repeat the same transformation on new data.
//!
//! Per trading day the sequence block holds
//! `[ret, oc_ret, ma5_gap, ma20_gap, ma60_gap, log_volume]` followed by the
//! four daily sentiment scores. Static features are the carried-forward
//! financial and macro values plus one indicator column per policy category.
//! The target for a window ending on day `t` is the population standard
//! deviation of the log returns of days `t+1 ..= t+horizon`, min-max scaled
//! with the training samples' range.

use serde::{Deserialize, Serialize};

use crate::data_io::csv_io::{FINANCIAL_COLUMNS, MACRO_COLUMNS};
use crate::data_io::{chronological_split, DatasetBundle, NewsData, SplitSpec};
use crate::error::{Error, Result};
use crate::features::{
    aggregate_daily_sentiment, align_by_date, apply_standardize, build_windows, fit_standardize, moving_average,
    one_hot_column, one_hot_encode, sentiment_score, FillRule, SampleSet, SentimentLexicon, SentimentScores,
    StandardizationStats, TimeSeriesFrame,
};
use crate::eval::EvalReport;
use crate::models::{linreg_fit, HybridConfig, HybridDims, HybridModel, LinearDims, LinearRegressionModel, Model, DEFAULT_RIDGE};
use crate::tensor::SeededRng;
use crate::training::{fit, grid_search, streams, GridTrial, TrainConfig, TrainLog};

pub const MARKET_FEATURES: [&str; 6] = ["ret", "oc_ret", "ma5_gap", "ma20_gap", "ma60_gap", "log_volume"];
pub const TARGET_COLUMN: &str = "realized_vol";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub window: usize,
    pub horizon: usize,
    pub split: SplitSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: 20,
            horizon: 5,
            split: SplitSpec::default(),
        }
    }
}

/// Everything fitted on the training period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    pub config: PipelineConfig,
    pub seq_columns: Vec<String>,
    pub static_columns: Vec<String>,
    pub policy_vocabulary: Vec<String>,
    pub has_macro: bool,
    pub seq_stats: StandardizationStats,
    pub static_stats: StandardizationStats,
    pub target_min: f64,
    pub target_max: f64,
    /// Identifies the split the state was fitted on.
    pub split: SplitFingerprint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFingerprint {
    pub samples: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub first_date: String,
    pub last_date: String,
}

impl PipelineState {
    pub fn market_width(&self) -> usize {
        MARKET_FEATURES.len()
    }

    pub fn sentiment_width(&self) -> usize {
        SentimentScores::COLUMNS.len()
    }

    pub fn hybrid_dims(&self) -> HybridDims {
        HybridDims {
            window: self.config.window,
            market: self.market_width(),
            sentiment: self.sentiment_width(),
            statics: self.static_columns.len(),
        }
    }

    pub fn linear_dims(&self) -> LinearDims {
        LinearDims {
            window: self.config.window,
            seq_features: self.seq_columns.len(),
            statics: self.static_columns.len(),
        }
    }

    pub fn hybrid_config(&self, hidden: usize, dropout: f64) -> HybridConfig {
        HybridConfig {
            hidden,
            dropout,
            ..HybridConfig::default()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::ModelFormat(format!("cannot encode pipeline state: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(format!("bad pipeline state: {e}")))
    }

    fn normalize_target(&self, y: f64) -> f64 {
        (y - self.target_min) / (self.target_max - self.target_min)
    }
}

/// Samples with targets normalized, and their chronological split.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub samples: SampleSet,
    pub train: SampleSet,
    pub val: SampleSet,
    pub test: SampleSet,
    pub state: PipelineState,
}

fn log_returns(values: &[f64], pairs: impl Fn(usize) -> Option<(f64, f64)>) -> Result<Vec<Option<f64>>> {
    (0..values.len())
        .map(|i| match pairs(i) {
            Some((from, to)) if from > 0.0 && to > 0.0 => Ok(Some((to / from).ln())),
            Some((from, to)) => Err(Error::Schema(format!("non-positive price ({from}, {to}) in market data"))),
            None => Ok(None),
        })
        .collect()
}

/// Trailing population standard deviation over `w` values.
fn trailing_std(series: &[Option<f64>], w: usize) -> Vec<Option<f64>> {
    (0..series.len())
        .map(|i| {
            if i + 1 < w {
                return None;
            }
            let vals: Option<Vec<f64>> = series[i + 1 - w..=i].iter().copied().collect();
            let vals = vals?;
            let mean = vals.iter().sum::<f64>() / w as f64;
            Some((vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w as f64).sqrt())
        })
        .collect()
}

fn market_features(market: &TimeSeriesFrame, horizon: usize) -> Result<TimeSeriesFrame> {
    let open = market.values("open")?;
    let close = market.values("close")?;
    let volume = market.values("volume")?;
    let ret = log_returns(close, |i| (i > 0).then(|| (close[i - 1], close[i])))?;
    let oc = log_returns(close, |i| Some((open[i], close[i])))?;
    let mut f = TimeSeriesFrame::new(market.dates().to_vec())?;
    f.add_optional_column("ret", ret.clone())?;
    f.add_optional_column("oc_ret", oc)?;
    for (name, w) in [("ma5_gap", 5), ("ma20_gap", 20), ("ma60_gap", 60)] {
        let ma = moving_average(close, w)?;
        f.add_optional_column(name, ma.iter().zip(close).map(|(m, c)| m.map(|m| c / m - 1.0)).collect())?;
    }
    if let Some(v) = volume.iter().find(|v| **v < 0.0) {
        return Err(Error::Schema(format!("negative volume {v} in market data")));
    }
    f.add_column("log_volume", volume.iter().map(|v| v.ln_1p()).collect())?;
    f.add_optional_column(TARGET_COLUMN, trailing_std(&ret, horizon))?;
    Ok(f)
}

fn sentiment_frame(bundle: &DatasetBundle, calendar: &[chrono::NaiveDate]) -> Result<(TimeSeriesFrame, FillRule)> {
    match &bundle.news {
        NewsData::Items(items) => {
            let lex = SentimentLexicon::finance();
            let scored: Vec<_> = items.iter().map(|i| (i.date, sentiment_score(&i.text, &lex))).collect();
            Ok((aggregate_daily_sentiment(&scored, Some(calendar))?, FillRule::Zero))
        }
        NewsData::Scored(frame) => Ok((
            frame.select_columns(&SentimentScores::COLUMNS)?,
            FillRule::Constant(SentimentScores::NEUTRAL.as_array().to_vec()),
        )),
    }
}

/// Joined raw feature frame on the market calendar; rows with any missing
/// value (the warm-up of the moving averages, the target tail) are dropped
/// except for the target column, which may be missing at the end.
fn raw_features(bundle: &DatasetBundle, vocabulary: &[String], horizon: usize) -> Result<TimeSeriesFrame> {
    let market = market_features(&bundle.market, horizon)?;
    let calendar = market.dates().to_vec();
    let (sentiment, sent_fill) = sentiment_frame(bundle, &calendar)?;
    let mut sources: Vec<(&TimeSeriesFrame, FillRule)> = vec![(&sentiment, sent_fill), (&bundle.financial, FillRule::ForwardFill)];
    if let Some(m) = &bundle.macroeconomic {
        sources.push((m, FillRule::ForwardFill));
    }
    let events: Vec<_> = bundle.policy.iter().map(|p| (p.date, p.category.clone())).collect();
    let policy = if vocabulary.is_empty() {
        if let Some(p) = bundle.policy.first() {
            return Err(Error::Schema(format!("unknown policy category `{}` on {}", p.category, p.date)));
        }
        None
    } else {
        Some(one_hot_encode(&events, vocabulary, &calendar)?)
    };
    if let Some(p) = &policy {
        sources.push((p, FillRule::Zero));
    }
    let joined = align_by_date(&market, &sources)?;
    // Keep rows whose features are complete; the target is allowed to be
    // missing because it is only read `horizon` rows later.
    let feature_complete: Vec<bool> = (0..joined.len())
        .map(|r| joined.columns().iter().filter(|c| c.name != TARGET_COLUMN).all(|c| !c.is_missing(r)))
        .collect();
    let first = feature_complete
        .iter()
        .position(|&ok| ok)
        .ok_or_else(|| Error::InsufficientData { needed: 61, available: joined.len() })?;
    if let Some(bad) = feature_complete[first..].iter().position(|&ok| !ok) {
        return Err(Error::Schema(format!("missing feature values on {}", joined.dates()[first + bad])));
    }
    Ok(joined.slice_rows(first..joined.len()))
}

fn column_names(has_macro: bool, vocabulary: &[String]) -> (Vec<String>, Vec<String>, Vec<String>) {
    let seq: Vec<String> = MARKET_FEATURES
        .iter()
        .chain(SentimentScores::COLUMNS.iter())
        .map(|s| s.to_string())
        .collect();
    let mut continuous: Vec<String> = FINANCIAL_COLUMNS.iter().map(|s| s.to_string()).collect();
    if has_macro {
        continuous.extend(MACRO_COLUMNS.iter().map(|s| s.to_string()));
    }
    let mut statics = continuous.clone();
    statics.extend(vocabulary.iter().map(|c| one_hot_column(c)));
    (seq, continuous, statics)
}

fn windows(frame: &TimeSeriesFrame, seq: &[String], statics: &[String], cfg: &PipelineConfig) -> Result<SampleSet> {
    let seq: Vec<&str> = seq.iter().map(String::as_str).collect();
    let statics: Vec<&str> = statics.iter().map(String::as_str).collect();
    let set = build_windows(frame, &seq, &statics, TARGET_COLUMN, cfg.window, cfg.horizon)?;
    set.check_no_lookahead()?;
    Ok(set)
}

fn fingerprint(samples: &SampleSet, spec: &SplitSpec) -> Result<SplitFingerprint> {
    let (train, val, test) = spec.counts(samples.len())?;
    Ok(SplitFingerprint {
        samples: samples.len(),
        train,
        val,
        test,
        first_date: samples.dates[0].to_string(),
        last_date: samples.dates[samples.len() - 1].to_string(),
    })
}

/// Builds features, fits standardization and target scaling on the training
/// block only, and splits chronologically.
pub fn prepare(bundle: &DatasetBundle, cfg: &PipelineConfig) -> Result<PreparedData> {
    cfg.split.validate()?;
    let mut vocabulary: Vec<String> = bundle.policy.iter().map(|p| p.category.clone()).collect();
    vocabulary.sort();
    vocabulary.dedup();
    let has_macro = bundle.macroeconomic.is_some();
    let raw = raw_features(bundle, &vocabulary, cfg.horizon)?;
    let (seq_columns, continuous, static_columns) = column_names(has_macro, &vocabulary);

    // Row layout is fixed before scaling, so the split can be computed first.
    let unscaled = windows(&raw, &seq_columns, &static_columns, cfg)?;
    let (n_train, _, _) = cfg.split.counts(unscaled.len())?;
    // Training inputs cover rows 0 ..= n_train - 1 + window - 1.
    let train_rows = 0..n_train + cfg.window - 1;
    let seq_refs: Vec<&str> = seq_columns.iter().map(String::as_str).collect();
    let cont_refs: Vec<&str> = continuous.iter().map(String::as_str).collect();
    let seq_stats = fit_standardize(&raw.select_columns(&seq_refs)?, train_rows.clone())?;
    let static_stats = fit_standardize(&raw.select_columns(&cont_refs)?, train_rows)?;

    let train_y = &unscaled.y[..n_train];
    let target_min = train_y.iter().copied().fold(f64::INFINITY, f64::min);
    let target_max = train_y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(target_max > target_min) {
        return Err(Error::Numerical("training targets have zero range".into()));
    }
    let mut state = PipelineState {
        config: cfg.clone(),
        seq_columns,
        static_columns,
        policy_vocabulary: vocabulary,
        has_macro,
        seq_stats,
        static_stats,
        target_min,
        target_max,
        split: fingerprint(&unscaled, &cfg.split)?,
    };
    let samples = transform_frame(&raw, &state)?;
    state.split = fingerprint(&samples, &cfg.split)?;
    let (train, val, test) = chronological_split(&samples, &cfg.split)?;
    Ok(PreparedData {
        samples,
        train,
        val,
        test,
        state,
    })
}

fn transform_frame(raw: &TimeSeriesFrame, state: &PipelineState) -> Result<SampleSet> {
    let scaled = apply_standardize(&apply_standardize(raw, &state.seq_stats)?, &state.static_stats)?;
    let mut set = windows(&scaled, &state.seq_columns, &state.static_columns, &state.config)?;
    for y in &mut set.y {
        *y = state.normalize_target(*y);
    }
    Ok(set)
}

/// Applies a fitted state to (possibly new) data. The policy vocabulary is
/// the one seen at fit time; unknown categories are a schema error.
pub fn transform(bundle: &DatasetBundle, state: &PipelineState) -> Result<SampleSet> {
    if bundle.macroeconomic.is_some() != state.has_macro {
        return Err(Error::Schema(format!(
            "model was fitted {} macro data but the dataset {} it",
            if state.has_macro { "with" } else { "without" },
            if bundle.macroeconomic.is_some() { "has" } else { "lacks" }
        )));
    }
    let raw = raw_features(bundle, &state.policy_vocabulary, state.config.horizon)?;
    transform_frame(&raw, state)
}

/// Test block of `samples` under the state's split, after checking that the
/// samples are the ones the state was fitted on.
pub fn split_for_state(samples: &SampleSet, state: &PipelineState) -> Result<(SampleSet, SampleSet, SampleSet)> {
    let fp = fingerprint(samples, &state.config.split)?;
    if fp != state.split {
        return Err(Error::Contract(format!(
            "data does not match the split the model was trained on (model: {} samples {}..{}, data: {} samples {}..{})",
            state.split.samples, state.split.first_date, state.split.last_date, fp.samples, fp.first_date, fp.last_date
        )));
    }
    chronological_split(samples, &state.config.split)
}

/// Copy of `samples` with the sentiment channels set to zero, which is their
/// training mean after standardization.
pub fn zero_sentiment(samples: &SampleSet) -> SampleSet {
    let idx: Vec<usize> = samples
        .seq_columns
        .iter()
        .enumerate()
        .filter(|(_, c)| SentimentScores::COLUMNS.contains(&c.as_str()))
        .map(|(i, _)| i)
        .collect();
    let mut out = samples.clone();
    for x in &mut out.x_seq {
        let cols = x.cols();
        for (k, v) in x.data_mut().iter_mut().enumerate() {
            if idx.contains(&(k % cols)) {
                *v = 0.0;
            }
        }
    }
    out
}

/// Fresh hybrid model for this data layout; weights drawn from the
/// initialization stream of `cfg.seed`.
pub fn build_hybrid(state: &PipelineState, cfg: &TrainConfig) -> Result<HybridModel> {
    let mut rng = SeededRng::derive(cfg.seed, streams::INIT);
    HybridModel::new(state.hybrid_dims(), &state.hybrid_config(cfg.hidden_size, cfg.dropout_p), &mut rng)
}

pub struct HybridRun {
    pub model: HybridModel,
    pub config: TrainConfig,
    pub log: TrainLog,
    /// Empty unless a grid was searched.
    pub trials: Vec<GridTrial>,
}

/// Fits the hybrid model, searching `cfg.grid` when it is non-empty.
pub fn train_hybrid(data: &PreparedData, cfg: &TrainConfig) -> Result<HybridRun> {
    if cfg.grid.is_empty() {
        let (model, log) = fit(build_hybrid(&data.state, cfg)?, &data.train, &data.val, cfg)?;
        return Ok(HybridRun {
            model,
            config: cfg.clone(),
            log,
            trials: Vec::new(),
        });
    }
    let out = grid_search(|c| build_hybrid(&data.state, c), &data.train, &data.val, cfg)?;
    Ok(HybridRun {
        model: out.model,
        config: out.config,
        log: out.log,
        trials: out.trials,
    })
}

/// Least-squares baseline on the training block.
pub fn train_linear(data: &PreparedData) -> Result<LinearRegressionModel> {
    linreg_fit(&data.train, DEFAULT_RIDGE)
}

pub fn evaluate_model(model: &Model, samples: &SampleSet, threshold: f64) -> Result<EvalReport> {
    let preds = crate::models::predict_batch(model, samples)?;
    let yhat: Vec<f64> = preds.iter().map(|p| p.risk_score).collect();
    EvalReport::compute(&samples.y, &yhat, threshold)
}
