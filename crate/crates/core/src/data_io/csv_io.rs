//! CSV loaders and writers for the input schemas.
//!
//! | file          | columns                          |
//! |---------------|----------------------------------|
//! | market.csv    | `date,open,close,volume`         |
//! | financial.csv | `date,profit,debt_ratio,cash_flow` |
//! | macro.csv     | `date,gdp,cpi,interest_rate`     |
//! | news.csv      | `date,text` or `date,pos,neg,neu,compound` |
//! | policy.csv    | `date,category`                  |
//!
//! Extra columns are ignored. Rows are returned in ascending date order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use log::warn;

use crate::error::{Error, Result};
use crate::features::{SentimentScores, TimeSeriesFrame};

pub const MARKET_COLUMNS: [&str; 3] = ["open", "close", "volume"];
pub const FINANCIAL_COLUMNS: [&str; 3] = ["profit", "debt_ratio", "cash_flow"];
pub const MACRO_COLUMNS: [&str; 3] = ["gdp", "cpi", "interest_rate"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewsItem {
    pub date: NaiveDate,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyEvent {
    pub date: NaiveDate,
    pub category: String,
}

fn label(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn parse_date(file: &str, line: u64, raw: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d").map_err(|e| Error::Parse {
        file: file.to_string(),
        line,
        message: format!("bad date `{raw}`: {e}"),
    })
}

fn parse_f64(file: &str, line: u64, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        file: file.to_string(),
        line,
        message: format!("bad number `{raw}` in column `{column}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            file: file.to_string(),
            line,
            message: format!("non-finite value in column `{column}`"),
        });
    }
    Ok(v)
}

struct Table {
    file: String,
    header: Vec<String>,
    /// (line number, fields)
    rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    fn read(reader: impl Read, file: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
        let to_err = |e: csv::Error| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse {
                file: file.to_string(),
                line,
                message: e.to_string(),
            }
        };
        let header: Vec<String> = rdr.headers().map_err(to_err)?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(to_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec.iter().map(str::to_string).collect()));
        }
        Ok(Self {
            file: file.to_string(),
            header,
            rows,
        })
    }

    fn index(&self, column: &str) -> Result<usize> {
        self.header.iter().position(|h| h == column).ok_or_else(|| Error::MissingColumn {
            file: self.file.clone(),
            column: column.to_string(),
        })
    }

    fn has(&self, column: &str) -> bool {
        self.header.iter().any(|h| h == column)
    }

    /// Row order that sorts by date; rejects duplicate dates.
    fn date_order(&self) -> Result<(Vec<NaiveDate>, Vec<usize>)> {
        let di = self.index("date")?;
        let dates = self
            .rows
            .iter()
            .map(|(line, f)| parse_date(&self.file, *line, &f[di]))
            .collect::<Result<Vec<_>>>()?;
        let mut order: Vec<usize> = (0..dates.len()).collect();
        if dates.windows(2).any(|w| w[0] > w[1]) {
            warn!("{}: rows are not in date order; sorting", self.file);
            order.sort_by_key(|&i| dates[i]);
        }
        Ok((dates, order))
    }
}

fn numeric_frame(table: &Table, columns: &[&str]) -> Result<TimeSeriesFrame> {
    let (dates, order) = table.date_order()?;
    let idx = columns.iter().map(|c| table.index(c)).collect::<Result<Vec<_>>>()?;
    for w in order.windows(2) {
        if dates[w[0]] == dates[w[1]] {
            return Err(Error::Parse {
                file: table.file.clone(),
                line: table.rows[w[1]].0,
                message: format!("duplicate date {}", dates[w[1]]),
            });
        }
    }
    let mut frame = TimeSeriesFrame::new(order.iter().map(|&i| dates[i]).collect())?;
    for (name, &ci) in columns.iter().zip(&idx) {
        let values = order
            .iter()
            .map(|&i| {
                let (line, fields) = &table.rows[i];
                parse_f64(&table.file, *line, name, &fields[ci])
            })
            .collect::<Result<Vec<_>>>()?;
        frame.add_column(*name, values)?;
    }
    Ok(frame)
}

fn load_numeric(path: &Path, columns: &[&str]) -> Result<TimeSeriesFrame> {
    numeric_frame(&Table::read(open(path)?, &label(path))?, columns)
}

pub fn read_market_csv(reader: impl Read, file: &str) -> Result<TimeSeriesFrame> {
    numeric_frame(&Table::read(reader, file)?, &MARKET_COLUMNS)
}

pub fn load_market_csv(path: &Path) -> Result<TimeSeriesFrame> {
    load_numeric(path, &MARKET_COLUMNS)
}

pub fn load_financial_csv(path: &Path) -> Result<TimeSeriesFrame> {
    load_numeric(path, &FINANCIAL_COLUMNS)
}

pub fn load_macro_csv(path: &Path) -> Result<TimeSeriesFrame> {
    load_numeric(path, &MACRO_COLUMNS)
}

/// Either raw headlines or already-scored daily sentiment.
#[derive(Debug, Clone, PartialEq)]
pub enum NewsData {
    Items(Vec<NewsItem>),
    Scored(TimeSeriesFrame),
}

pub fn read_news_csv(reader: impl Read, file: &str) -> Result<NewsData> {
    let table = Table::read(reader, file)?;
    if !table.has("text") && SentimentScores::COLUMNS.iter().all(|c| table.has(c)) {
        return Ok(NewsData::Scored(numeric_frame(&table, &SentimentScores::COLUMNS)?));
    }
    let ti = table.index("text")?;
    let (dates, order) = table.date_order()?;
    Ok(NewsData::Items(
        order
            .into_iter()
            .map(|i| NewsItem {
                date: dates[i],
                text: table.rows[i].1[ti].clone(),
            })
            .collect(),
    ))
}

pub fn load_news_csv(path: &Path) -> Result<NewsData> {
    read_news_csv(open(path)?, &label(path))
}

pub fn read_policy_csv(reader: impl Read, file: &str) -> Result<Vec<PolicyEvent>> {
    let table = Table::read(reader, file)?;
    let ci = table.index("category")?;
    let (dates, order) = table.date_order()?;
    order
        .into_iter()
        .map(|i| {
            let (line, fields) = &table.rows[i];
            let category = fields[ci].trim().to_string();
            if category.is_empty() {
                return Err(Error::Parse {
                    file: table.file.clone(),
                    line: *line,
                    message: "empty policy category".into(),
                });
            }
            Ok(PolicyEvent { date: dates[i], category })
        })
        .collect()
}

pub fn load_policy_csv(path: &Path) -> Result<Vec<PolicyEvent>> {
    read_policy_csv(open(path)?, &label(path))
}

fn finish(path: &Path, bytes: Vec<u8>) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// `date` plus the named columns, floats in shortest round-trip form.
pub fn frame_to_csv(frame: &TimeSeriesFrame, columns: &[&str]) -> Result<Vec<u8>> {
    let cols = columns.iter().map(|c| frame.values(c)).collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["date"];
    header.extend_from_slice(columns);
    let io = |e: csv::Error| Error::Contract(format!("csv encoding failed: {e}"));
    w.write_record(&header).map_err(io)?;
    for (i, d) in frame.dates().iter().enumerate() {
        let mut rec = vec![d.to_string()];
        rec.extend(cols.iter().map(|c| c[i].to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Contract(format!("csv encoding failed: {e}")))
}

pub fn write_frame_csv(path: &Path, frame: &TimeSeriesFrame, columns: &[&str]) -> Result<()> {
    finish(path, frame_to_csv(frame, columns)?)
}

pub fn write_news_csv(path: &Path, news: &NewsData) -> Result<()> {
    match news {
        NewsData::Scored(frame) => write_frame_csv(path, frame, &SentimentScores::COLUMNS),
        NewsData::Items(items) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["date", "text"]).map_err(|e| csv_error(path, e))?;
            for it in items {
                w.write_record([it.date.to_string(), it.text.clone()]).map_err(|e| csv_error(path, e))?;
            }
            finish(path, w.into_inner().map_err(|e| Error::io(path, e.into_error()))?)
        }
    }
}

pub fn write_policy_csv(path: &Path, events: &[PolicyEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "category"]).map_err(|e| csv_error(path, e))?;
    for ev in events {
        w.write_record([ev.date.to_string(), ev.category.clone()]).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w.into_inner().map_err(|e| Error::io(path, e.into_error()))?)
}
