//! Lexicon-based sentiment scoring of news text.
//!
//! Lexicon file format: one lowercase term per line under `[positive]` and
//! `[negative]` section headers. Blank lines and lines starting with `#` are
//! ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::features::TimeSeriesFrame;

const DEFAULT_POSITIVE: &[&str] = &[
    "gain", "gains", "rally", "rallies", "surge", "surges", "soar", "soars", "jump", "jumps", "rise", "rises",
    "growth", "strong", "stronger", "beat", "beats", "record", "profit", "profits", "upgrade", "upgraded",
    "bullish", "optimism", "optimistic", "recovery", "rebound", "expansion", "outperform", "robust", "boost",
    "boosts", "improve", "improves", "improved", "positive", "confidence", "stable", "stability", "upbeat",
    "dividend", "success", "successful", "advance", "advances", "momentum", "win", "wins", "resilient",
    "accelerate",
];

const DEFAULT_NEGATIVE: &[&str] = &[
    "loss", "losses", "crash", "crashes", "plunge", "plunges", "slump", "slumps", "fall", "falls", "drop",
    "drops", "decline", "declines", "weak", "weaker", "miss", "misses", "default", "defaults", "downgrade",
    "downgraded", "bearish", "fear", "fears", "panic", "recession", "crisis", "selloff", "volatile",
    "volatility", "risk", "risks", "uncertainty", "lawsuit", "fraud", "bankruptcy", "layoffs", "warning",
    "warns", "slowdown", "contraction", "negative", "turmoil", "concern", "concerns", "tumble", "tumbles",
    "inflation", "debt",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentLexicon {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
}

impl SentimentLexicon {
    pub fn new<I, J, S, T>(positive: I, negative: J) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let positive: BTreeSet<String> = positive.into_iter().map(|s| s.as_ref().to_lowercase()).collect();
        let negative: BTreeSet<String> = negative.into_iter().map(|s| s.as_ref().to_lowercase()).collect();
        if let Some(both) = positive.intersection(&negative).next() {
            return Err(Error::Parameter(format!("term `{both}` is both positive and negative")));
        }
        Ok(Self { positive, negative })
    }

    /// The built-in finance lexicon (50 positive, 50 negative terms).
    pub fn finance() -> Self {
        Self::new(DEFAULT_POSITIVE, DEFAULT_NEGATIVE).expect("built-in lexicon is disjoint")
    }

    pub fn parse(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Positive,
            Negative,
        }
        let mut section = Section::None;
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[positive]" => section = Section::Positive,
                "[negative]" => section = Section::Negative,
                term => match section {
                    Section::Positive => pos.push(term.to_string()),
                    Section::Negative => neg.push(term.to_string()),
                    Section::None => {
                        return Err(Error::Parse {
                            file: "lexicon".into(),
                            line: i as u64 + 1,
                            message: format!("term `{term}` appears before any section header"),
                        })
                    }
                },
            }
        }
        Self::new(pos, neg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::from("[positive]\n");
        for t in &self.positive {
            out.push_str(t);
            out.push('\n');
        }
        out.push_str("[negative]\n");
        for t in &self.negative {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn positive(&self) -> impl Iterator<Item = &str> {
        self.positive.iter().map(String::as_str)
    }

    pub fn negative(&self) -> impl Iterator<Item = &str> {
        self.negative.iter().map(String::as_str)
    }

    pub fn polarity(&self, token: &str) -> i8 {
        if self.positive.contains(token) {
            1
        } else if self.negative.contains(token) {
            -1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentimentScores {
    pub pos: f64,
    pub neg: f64,
    pub neu: f64,
    pub compound: f64,
}

impl SentimentScores {
    pub const NEUTRAL: Self = Self {
        pos: 0.0,
        neg: 0.0,
        neu: 1.0,
        compound: 0.0,
    };

    pub const COLUMNS: [&'static str; 4] = ["pos", "neg", "neu", "compound"];

    pub fn as_array(&self) -> [f64; 4] {
        [self.pos, self.neg, self.neu, self.compound]
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Fractions of positive, negative and other tokens plus
/// `compound = (P - N) / (P + N + 1)`.
pub fn sentiment_score(text: &str, lexicon: &SentimentLexicon) -> SentimentScores {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return SentimentScores::NEUTRAL;
    }
    let (mut p, mut n) = (0usize, 0usize);
    for t in &tokens {
        match lexicon.polarity(t) {
            1 => p += 1,
            -1 => n += 1,
            _ => {}
        }
    }
    let total = tokens.len() as f64;
    let pos = p as f64 / total;
    let neg = n as f64 / total;
    SentimentScores {
        pos,
        neg,
        // Summing (pos + neg) + neu then gives exactly 1.
        neu: 1.0 - (pos + neg),
        compound: (p as f64 - n as f64) / (p as f64 + n as f64 + 1.0),
    }
}

/// Per-date mean of each score. With a `calendar`, the output has exactly
/// those dates, days without items are neutral `(0, 0, 1, 0)`, and items on
/// other dates are ignored; without one, the output covers the item dates.
pub fn aggregate_daily_sentiment(
    items: &[(NaiveDate, SentimentScores)],
    calendar: Option<&[NaiveDate]>,
) -> Result<TimeSeriesFrame> {
    let mut by_day: BTreeMap<NaiveDate, ([f64; 4], usize)> = BTreeMap::new();
    for (date, s) in items {
        let entry = by_day.entry(*date).or_insert(([0.0; 4], 0));
        for (acc, v) in entry.0.iter_mut().zip(s.as_array()) {
            *acc += v;
        }
        entry.1 += 1;
    }
    let dates: Vec<NaiveDate> = match calendar {
        Some(c) => c.to_vec(),
        None => by_day.keys().copied().collect(),
    };
    let mut cols: [Vec<f64>; 4] = Default::default();
    for d in &dates {
        let row = match by_day.get(d) {
            Some((sum, n)) => sum.map(|v| v / *n as f64),
            None => SentimentScores::NEUTRAL.as_array(),
        };
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    let mut frame = TimeSeriesFrame::new(dates)?;
    for (name, values) in SentimentScores::COLUMNS.iter().zip(cols) {
        frame.add_column(*name, values)?;
    }
    Ok(frame)
}
