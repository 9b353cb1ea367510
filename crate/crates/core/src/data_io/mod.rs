//! File formats, dataset bundles, chronological splitting, model files and
//! the synthetic data generator.

pub mod csv_io;
mod model_file;
mod split;
pub mod synth;

use std::fs;
use std::path::Path;

use chrono::NaiveDate;

pub use csv_io::{NewsData, NewsItem, PolicyEvent};
pub use model_file::{load_model, model_from_str, model_to_string, save_model, ModelFile, MODEL_MAGIC};
pub use split::{chronological_split, SplitSpec, MIN_SPLIT_SAMPLES};
pub use synth::{synth_generate, SynthConfig};

use crate::error::{Error, Result};
use crate::features::TimeSeriesFrame;

pub const MARKET_FILE: &str = "market.csv";
pub const FINANCIAL_FILE: &str = "financial.csv";
pub const MACRO_FILE: &str = "macro.csv";
pub const NEWS_FILE: &str = "news.csv";
pub const POLICY_FILE: &str = "policy.csv";

/// Everything the pipeline reads for one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub market: TimeSeriesFrame,
    pub financial: TimeSeriesFrame,
    pub macroeconomic: Option<TimeSeriesFrame>,
    pub news: NewsData,
    pub policy: Vec<PolicyEvent>,
    pub provenance: String,
}

fn span(dates: &[NaiveDate]) -> Option<(NaiveDate, NaiveDate)> {
    Some((*dates.first()?, *dates.last()?))
}

impl DatasetBundle {
    /// Each component must overlap the market date range. Fundamentals may
    /// start earlier since they are carried forward.
    pub fn validate(&self) -> Result<()> {
        let (m0, m1) = span(self.market.dates()).ok_or(Error::EmptyInput("market data"))?;
        let check = |name: &str, dates: &[NaiveDate]| -> Result<()> {
            match span(dates) {
                Some((a, b)) if a <= m1 && b >= m0 => Ok(()),
                Some((a, b)) => Err(Error::Alignment(format!(
                    "{name} covers {a}..{b}, which does not overlap market data {m0}..{m1}"
                ))),
                None => Err(Error::Alignment(format!("{name} has no rows"))),
            }
        };
        check("financial data", self.financial.dates())?;
        if let Some(m) = &self.macroeconomic {
            check("macro data", m.dates())?;
        }
        match &self.news {
            NewsData::Items(items) => {
                let dates: Vec<NaiveDate> = items.iter().map(|i| i.date).collect();
                check("news", &dates)?;
            }
            NewsData::Scored(frame) => check("news", frame.dates())?,
        }
        Ok(())
    }

    /// Reads the five CSV files from `dir`; `macro.csv` and `policy.csv` are optional.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let market = csv_io::load_market_csv(&dir.join(MARKET_FILE))?;
        let financial = csv_io::load_financial_csv(&dir.join(FINANCIAL_FILE))?;
        let macro_path = dir.join(MACRO_FILE);
        let macroeconomic = if macro_path.exists() {
            Some(csv_io::load_macro_csv(&macro_path)?)
        } else {
            None
        };
        let news = csv_io::load_news_csv(&dir.join(NEWS_FILE))?;
        let policy_path = dir.join(POLICY_FILE);
        let policy = if policy_path.exists() {
            csv_io::load_policy_csv(&policy_path)?
        } else {
            Vec::new()
        };
        let bundle = Self {
            market,
            financial,
            macroeconomic,
            news,
            policy,
            provenance: format!("csv: {}", dir.display()),
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        csv_io::write_frame_csv(&dir.join(MARKET_FILE), &self.market, &csv_io::MARKET_COLUMNS)?;
        csv_io::write_frame_csv(&dir.join(FINANCIAL_FILE), &self.financial, &csv_io::FINANCIAL_COLUMNS)?;
        if let Some(m) = &self.macroeconomic {
            csv_io::write_frame_csv(&dir.join(MACRO_FILE), m, &csv_io::MACRO_COLUMNS)?;
        }
        csv_io::write_news_csv(&dir.join(NEWS_FILE), &self.news)?;
        csv_io::write_policy_csv(&dir.join(POLICY_FILE), &self.policy)
    }
}
