use std::ops::Range;

use chrono::NaiveDate;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    /// `None` when every entry is present.
    pub missing: Option<Vec<bool>>,
}

impl Column {
    pub fn is_missing(&self, row: usize) -> bool {
        self.missing.as_ref().is_some_and(|m| m[row])
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        (!self.is_missing(row)).then(|| self.values[row])
    }
}

/// Date-indexed table of named `f64` columns. Dates are strictly increasing
/// and every column has one entry per date.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeriesFrame {
    dates: Vec<NaiveDate>,
    columns: Vec<Column>,
}

impl TimeSeriesFrame {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Contract(format!(
                "frame dates must be strictly increasing: {} is followed by {}",
                w[0], w[1]
            )));
        }
        Ok(Self {
            dates,
            columns: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Contract(format!("frame has no column `{name}`")))
    }

    pub fn values(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.column(name)?.values)
    }

    fn push(&mut self, column: Column) -> Result<()> {
        if column.values.len() != self.dates.len() {
            return Err(Error::dims(&[column.values.len()], &[self.dates.len()], "column length vs dates"));
        }
        if self.columns.iter().any(|c| c.name == column.name) {
            return Err(Error::Contract(format!("duplicate column `{}`", column.name)));
        }
        self.columns.push(column);
        Ok(())
    }

    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        self.push(Column {
            name: name.into(),
            values,
            missing: None,
        })
    }

    pub fn with_column(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.add_column(name, values)?;
        Ok(self)
    }

    /// Adds a column whose `None` entries are flagged missing (stored as 0).
    pub fn add_optional_column(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let missing: Vec<bool> = values.iter().map(Option::is_none).collect();
        let any = missing.iter().any(|&m| m);
        self.push(Column {
            name: name.into(),
            values: values.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
            missing: any.then_some(missing),
        })
    }

    pub fn row_complete(&self, row: usize) -> bool {
        self.columns.iter().all(|c| !c.is_missing(row))
    }

    fn take_rows(&self, rows: &[usize]) -> Self {
        Self {
            dates: rows.iter().map(|&r| self.dates[r]).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| {
                    let missing = c.missing.as_ref().map(|m| rows.iter().map(|&r| m[r]).collect::<Vec<_>>());
                    Column {
                        name: c.name.clone(),
                        values: rows.iter().map(|&r| c.values[r]).collect(),
                        missing: missing.filter(|m| m.iter().any(|&x| x)),
                    }
                })
                .collect(),
        }
    }

    pub fn slice_rows(&self, range: Range<usize>) -> Self {
        self.take_rows(&range.collect::<Vec<_>>())
    }

    /// Keeps only rows with no missing entry in any column.
    pub fn drop_incomplete_rows(&self) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&r| self.row_complete(r)).collect();
        self.take_rows(&keep)
    }

    pub fn select_columns(&self, names: &[&str]) -> Result<Self> {
        let mut out = Self {
            dates: self.dates.clone(),
            columns: Vec::new(),
        };
        for name in names {
            out.push(self.column(name)?.clone())?;
        }
        Ok(out)
    }

    /// Row index of `date`, if present.
    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn dates_must_increase() {
        assert!(TimeSeriesFrame::new(vec![d("2020-01-02"), d("2020-01-02")]).is_err());
        assert!(TimeSeriesFrame::new(vec![d("2020-01-03"), d("2020-01-02")]).is_err());
        assert!(TimeSeriesFrame::new(vec![d("2020-01-02"), d("2020-01-03")]).is_ok());
    }

    #[test]
    fn column_lengths_enforced() {
        let mut f = TimeSeriesFrame::new(vec![d("2020-01-02"), d("2020-01-03")]).unwrap();
        assert!(f.add_column("a", vec![1.0]).is_err());
        f.add_column("a", vec![1.0, 2.0]).unwrap();
        assert!(f.add_column("a", vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn incomplete_rows_dropped() {
        let mut f = TimeSeriesFrame::new(vec![d("2020-01-02"), d("2020-01-03"), d("2020-01-06")]).unwrap();
        f.add_optional_column("a", vec![None, Some(2.0), Some(3.0)]).unwrap();
        f.add_column("b", vec![1.0, 2.0, 3.0]).unwrap();
        let g = f.drop_incomplete_rows();
        assert_eq!(g.dates(), &[d("2020-01-03"), d("2020-01-06")]);
        assert_eq!(g.values("a").unwrap(), &[2.0, 3.0]);
        assert!(g.column("a").unwrap().missing.is_none());
    }
}
