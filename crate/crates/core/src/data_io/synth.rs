//! Seeded synthetic market, fundamentals, news and policy data.
//!
//! Processes, all on a Monday–Friday calendar starting 2010-01-04:
//!
//! * latent mood `z_t`: AR(1) with coefficient [`MOOD_PERSISTENCE`] and unit
//!   stationary variance;
//! * volatility regime `m_t ∈ {1, 2}`, flipping with probability `regime_prob`;
//! * sentiment drive `g_t = −z_t` or, with `nonlinear`, `g_t = −z_t·(a + b·D_t)`
//!   where `D_t = 1` when the close is below its 20-day average ([`TREND_LOW`],
//!   [`TREND_HIGH`] give `a` and `a + b`);
//! * daily volatility `ln σ_t = ln σ₀ + ln m_t + κ·SCALE·g_{t−1}` and log return
//!   `r_t = μ − σ_t²/2 + σ_t·ε_t`;
//! * volume log-normal around 10⁶ with a loading on `|ε_t|`;
//! * headlines built from lexicon terms, each term positive with probability
//!   `logistic(2·z_t)` and padded with neutral words;
//! * quarterly fundamentals, monthly macro series and sporadic policy events,
//!   independent of the market path.
//!
//! With `κ = 0` the news carries no information about future volatility.

use chrono::{Datelike, Days, Months, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::data_io::csv_io::{NewsItem, PolicyEvent, FINANCIAL_COLUMNS, MACRO_COLUMNS, MARKET_COLUMNS};
use crate::data_io::{DatasetBundle, NewsData};
use crate::error::{Error, Result};
use crate::features::{SentimentLexicon, TimeSeriesFrame};
use crate::tensor::SeededRng;

pub const MIN_SYNTH_DAYS: usize = 200;
pub const MOOD_PERSISTENCE: f64 = 0.9;
pub const SENTIMENT_SCALE: f64 = 0.8;
pub const TREND_LOW: f64 = 0.5;
pub const TREND_HIGH: f64 = 1.5;
pub const TREND_WINDOW: usize = 20;
pub const DAILY_DRIFT: f64 = 2e-4;
pub const NO_NEWS_PROB: f64 = 0.05;
pub const HEADLINES_MIN: usize = 4;
pub const HEADLINES_SPREAD: usize = 4;
pub const HIGH_REGIME: f64 = 2.0;
pub const POLICY_CATEGORIES: [&str; 4] = ["rate_hike", "rate_cut", "regulation_tightening", "regulation_easing"];

const NEUTRAL_WORDS: &[&str] = &[
    "shares", "market", "company", "quarter", "report", "traders", "index", "outlook", "sector", "investors",
    "bank", "earnings", "analysts", "session", "stocks", "bonds", "currency", "officials", "today", "week",
];

mod streams {
    pub const MOOD: u64 = 10;
    pub const REGIME: u64 = 11;
    pub const RETURNS: u64 = 12;
    pub const TRADING: u64 = 13;
    pub const NEWS: u64 = 14;
    pub const FINANCIAL: u64 = 15;
    pub const MACRO: u64 = 16;
    pub const POLICY: u64 = 17;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_days: usize,
    pub seed: u64,
    /// Base daily volatility of log returns.
    pub sigma0: f64,
    /// Daily probability of switching volatility regime.
    pub regime_prob: f64,
    /// Coupling of news mood to next-day volatility.
    pub kappa: f64,
    /// Make the mood effect depend on the recent trend.
    pub nonlinear: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_days: 2000,
            seed: 7,
            sigma0: 0.01,
            regime_prob: 0.02,
            kappa: 0.8,
            nonlinear: true,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_days < MIN_SYNTH_DAYS {
            return Err(Error::Parameter(format!(
                "n_days must be at least {MIN_SYNTH_DAYS}, got {}",
                self.n_days
            )));
        }
        if !(self.sigma0 > 0.0 && self.sigma0 < 1.0) {
            return Err(Error::Parameter(format!("sigma0 must lie in (0, 1), got {}", self.sigma0)));
        }
        if !(0.0..=1.0).contains(&self.regime_prob) {
            return Err(Error::Parameter(format!("regime_prob must lie in [0, 1], got {}", self.regime_prob)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0 && self.kappa <= 5.0) {
            return Err(Error::Parameter(format!("kappa must lie in [0, 5], got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Monday–Friday dates starting at `start` (moved forward to a weekday).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (v * f).round() / f
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct MarketPath {
    frame: TimeSeriesFrame,
    mood: Vec<f64>,
    sigma: Vec<f64>,
}

fn market_path(cfg: &SynthConfig, dates: &[NaiveDate]) -> Result<MarketPath> {
    let n = dates.len();
    let mut mood_rng = SeededRng::derive(cfg.seed, streams::MOOD);
    let mut regime_rng = SeededRng::derive(cfg.seed, streams::REGIME);
    let mut ret_rng = SeededRng::derive(cfg.seed, streams::RETURNS);
    let mut trade_rng = SeededRng::derive(cfg.seed, streams::TRADING);

    let innov = (1.0 - MOOD_PERSISTENCE * MOOD_PERSISTENCE).sqrt();
    let mut mood = Vec::with_capacity(n);
    let mut z = mood_rng.standard_normal();
    for _ in 0..n {
        mood.push(z);
        z = MOOD_PERSISTENCE * z + innov * mood_rng.standard_normal();
    }

    let (mut open, mut close, mut volume, mut sigma) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut high_regime = false;
    let mut prev_close = 100.0;
    let mut drive = 0.0;
    for t in 0..n {
        if regime_rng.bernoulli(cfg.regime_prob) {
            high_regime = !high_regime;
        }
        let regime = if high_regime { HIGH_REGIME } else { 1.0 };
        let s = cfg.sigma0 * regime * (cfg.kappa * SENTIMENT_SCALE * drive).exp();
        let eps = ret_rng.standard_normal();
        let r = DAILY_DRIFT - 0.5 * s * s + s * eps;
        let gap = 0.2 * s * trade_rng.standard_normal();
        open[t] = round_to(prev_close * gap.exp(), 4);
        close[t] = round_to(prev_close * r.exp(), 4);
        volume[t] = (1e6 * (0.25 * trade_rng.standard_normal() + 0.5 * eps.abs()).exp()).round();
        sigma[t] = s;
        prev_close = close[t];

        // Drive for tomorrow from today's mood and trend.
        let lo = t.saturating_sub(TREND_WINDOW - 1);
        let ma = close[lo..=t].iter().sum::<f64>() / (t + 1 - lo) as f64;
        let down = close[t] < ma;
        drive = if cfg.nonlinear {
            -mood[t] * if down { TREND_HIGH } else { TREND_LOW }
        } else {
            -mood[t]
        };
    }
    let frame = TimeSeriesFrame::new(dates.to_vec())?
        .with_column(MARKET_COLUMNS[0], open)?
        .with_column(MARKET_COLUMNS[1], close)?
        .with_column(MARKET_COLUMNS[2], volume)?;
    Ok(MarketPath { frame, mood, sigma })
}

fn news(cfg: &SynthConfig, dates: &[NaiveDate], mood: &[f64]) -> Vec<NewsItem> {
    let lex = SentimentLexicon::finance();
    let pos: Vec<&str> = lex.positive().collect();
    let neg: Vec<&str> = lex.negative().collect();
    let mut rng = SeededRng::derive(cfg.seed, streams::NEWS);
    let mut items = Vec::new();
    for (d, z) in dates.iter().zip(mood) {
        if rng.bernoulli(NO_NEWS_PROB) {
            continue;
        }
        let p_pos = logistic(2.0 * z);
        let headlines = HEADLINES_MIN + rng.below(HEADLINES_SPREAD);
        for _ in 0..headlines {
            let mut words: Vec<&str> = Vec::new();
            for _ in 0..(2 + rng.below(3)) {
                words.push(NEUTRAL_WORDS[rng.below(NEUTRAL_WORDS.len())]);
            }
            for _ in 0..(1 + rng.below(2)) {
                let w = if rng.bernoulli(p_pos) {
                    pos[rng.below(pos.len())]
                } else {
                    neg[rng.below(neg.len())]
                };
                let at = rng.below(words.len() + 1);
                words.insert(at, w);
            }
            items.push(NewsItem {
                date: *d,
                text: words.join(" "),
            });
        }
    }
    items
}

/// Dates stepping by `months` from `first` while not after `last`.
fn periodic_dates(first: NaiveDate, last: NaiveDate, months: u32) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut d = first;
    while d <= last {
        out.push(d);
        d = d + Months::new(months);
    }
    out
}

fn financials(cfg: &SynthConfig, start: NaiveDate, end: NaiveDate) -> Result<TimeSeriesFrame> {
    let mut rng = SeededRng::derive(cfg.seed, streams::FINANCIAL);
    // First report one quarter before the market data so every day has one.
    let first = NaiveDate::from_ymd_opt(start.year(), 3 * ((start.month() - 1) / 3) + 1, 1).expect("quarter start") - Months::new(3);
    let dates = periodic_dates(first, end, 3);
    let (mut profit, mut debt, mut cash) = (Vec::new(), Vec::new(), Vec::new());
    let mut p = 100.0;
    let mut dr: f64 = 0.45;
    for _ in &dates {
        p = 100.0 + 0.7 * (p - 100.0) + rng.normal(0.0, 8.0);
        dr = (dr + rng.normal(0.0, 0.02)).clamp(0.1, 0.9);
        profit.push(round_to(p, 2));
        debt.push(round_to(dr, 4));
        cash.push(round_to(0.8 * p + rng.normal(0.0, 5.0), 2));
    }
    TimeSeriesFrame::new(dates)?
        .with_column(FINANCIAL_COLUMNS[0], profit)?
        .with_column(FINANCIAL_COLUMNS[1], debt)?
        .with_column(FINANCIAL_COLUMNS[2], cash)
}

fn macro_series(cfg: &SynthConfig, start: NaiveDate, end: NaiveDate) -> Result<TimeSeriesFrame> {
    let mut rng = SeededRng::derive(cfg.seed, streams::MACRO);
    let first = NaiveDate::from_ymd_opt(start.year(), start.month(), 1).expect("month start") - Months::new(1);
    let dates = periodic_dates(first, end, 1);
    let (mut gdp, mut cpi, mut rate) = (Vec::new(), Vec::new(), Vec::new());
    let (mut g, mut c, mut i): (f64, f64, f64) = (2.0, 2.0, 1.5);
    for _ in &dates {
        g = 2.0 + 0.9 * (g - 2.0) + rng.normal(0.0, 0.3);
        c = 2.0 + 0.95 * (c - 2.0) + rng.normal(0.0, 0.15);
        i = (i + rng.normal(0.0, 0.1)).clamp(0.0, 8.0);
        gdp.push(round_to(g, 3));
        cpi.push(round_to(c, 3));
        rate.push(round_to(i, 3));
    }
    TimeSeriesFrame::new(dates)?
        .with_column(MACRO_COLUMNS[0], gdp)?
        .with_column(MACRO_COLUMNS[1], cpi)?
        .with_column(MACRO_COLUMNS[2], rate)
}

fn policy(cfg: &SynthConfig, dates: &[NaiveDate]) -> Vec<PolicyEvent> {
    let mut rng = SeededRng::derive(cfg.seed, streams::POLICY);
    let mut out = Vec::new();
    for d in dates {
        if rng.bernoulli(1.0 / 30.0) {
            let category = POLICY_CATEGORIES[rng.below(POLICY_CATEGORIES.len())];
            out.push(PolicyEvent {
                date: *d,
                category: category.to_string(),
            });
        }
    }
    out
}

/// Generated data plus the latent series, for diagnostics and tests.
pub struct SynthOutput {
    pub bundle: DatasetBundle,
    pub mood: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<DatasetBundle> {
    Ok(synth_generate_with_latents(cfg)?.bundle)
}

pub fn synth_generate_with_latents(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let start = NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date");
    let dates = business_days(start, cfg.n_days);
    let end = *dates.last().expect("n_days > 0");
    let path = market_path(cfg, &dates)?;
    let bundle = DatasetBundle {
        market: path.frame,
        financial: financials(cfg, start, end)?,
        macroeconomic: Some(macro_series(cfg, start, end)?),
        news: NewsData::Items(news(cfg, &dates, &path.mood)),
        policy: policy(cfg, &dates),
        provenance: format!(
            "synthetic: n_days={} seed={} sigma0={} regime_prob={} kappa={} nonlinear={}",
            cfg.n_days, cfg.seed, cfg.sigma0, cfg.regime_prob, cfg.kappa, cfg.nonlinear
        ),
    };
    bundle.validate()?;
    Ok(SynthOutput {
        bundle,
        mood: path.mood,
        sigma: path.sigma,
    })
}
