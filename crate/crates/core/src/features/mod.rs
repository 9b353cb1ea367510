//! Feature engineering over dated market, financial, sentiment and policy
//! series, ending in windowed sample construction.

mod align;
mod frame;
mod moving_average;
mod onehot;
mod sentiment;
mod standardize;
mod windows;

pub use align::{align_by_date, FillRule};
pub use frame::{Column, TimeSeriesFrame};
pub use moving_average::moving_average;
pub use onehot::{one_hot_column, one_hot_encode};
pub use sentiment::{aggregate_daily_sentiment, sentiment_score, tokenize, SentimentLexicon, SentimentScores};
pub use standardize::{apply_standardize, fit_standardize, ColumnStats, StandardizationStats};
pub use windows::{build_windows, SampleRef, SampleSet};
