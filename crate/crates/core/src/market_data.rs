//! Daily-returns panels: CSV ingestion, validation, demeaning and windowing.
//!
//! On disk a panel is one row per trading day (`date,ASSET1,...,ASSETM`); in
//! memory it is stored assets-as-rows, so `returns` is `M × N`.

use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use ndarray::{Array1, Array2, Axis};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing or non-numeric cell at data row {row}, column {column}")]
    MissingCell { row: usize, column: usize },
    #[error("invalid date {value:?} at data row {row}")]
    BadDate { row: usize, value: String },
    #[error("dates are not strictly increasing at data row {row}")]
    NonMonotonicDates { row: usize },
    #[error("panel needs at least 2 assets, got {0}")]
    TooFewAssets(usize),
    #[error("panel needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("shape mismatch: {assets} assets, {dates} dates, returns {rows}x{cols}")]
    Shape {
        assets: usize,
        dates: usize,
        rows: usize,
        cols: usize,
    },
    #[error("window [{start}, {start}+{train}+{test}) does not fit a panel of {len} days")]
    WindowOutOfBounds {
        start: usize,
        train: usize,
        test: usize,
        len: usize,
    },
}

/// `M × N` matrix of simple daily returns with asset and date labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    assets: Vec<String>,
    dates: Vec<NaiveDate>,
    returns: Array2<f64>,
}

impl ReturnsPanel {
    pub fn new(
        assets: Vec<String>,
        dates: Vec<NaiveDate>,
        returns: Array2<f64>,
    ) -> Result<Self, PanelError> {
        let (rows, cols) = returns.dim();
        if rows != assets.len() || cols != dates.len() {
            return Err(PanelError::Shape {
                assets: assets.len(),
                dates: dates.len(),
                rows,
                cols,
            });
        }
        if rows < 2 {
            return Err(PanelError::TooFewAssets(rows));
        }
        if cols < 2 {
            return Err(PanelError::TooFewSamples(cols));
        }
        if let Some(pos) = dates.windows(2).position(|w| w[1] <= w[0]) {
            return Err(PanelError::NonMonotonicDates { row: pos + 1 });
        }
        for ((i, t), v) in returns.indexed_iter() {
            if !v.is_finite() {
                return Err(PanelError::MissingCell {
                    row: t,
                    column: i + 1,
                });
            }
        }
        Ok(Self {
            assets,
            dates,
            returns,
        })
    }

    /// Panel with generated labels `A000…` and consecutive weekdays from 2014-01-01.
    pub fn from_matrix(returns: Array2<f64>) -> Result<Self, PanelError> {
        let assets = (0..returns.nrows()).map(|i| format!("A{i:03}")).collect();
        let dates = weekdays_from(NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(), returns.ncols());
        Self::new(assets, dates, returns)
    }

    pub fn n_assets(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_days(&self) -> usize {
        self.returns.ncols()
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &Array2<f64> {
        &self.returns
    }

    /// Dimensionality constant `M / N`.
    pub fn dimensionality(&self) -> f64 {
        self.n_assets() as f64 / self.n_days() as f64
    }

    /// Per-asset arithmetic means over all days.
    pub fn row_means(&self) -> Array1<f64> {
        self.returns.mean_axis(Axis(1)).expect("panel has columns")
    }

    /// Sub-panel over a contiguous day range.
    pub fn columns(&self, days: Range<usize>) -> Result<Self, PanelError> {
        if days.end > self.n_days() || days.start >= days.end {
            return Err(PanelError::WindowOutOfBounds {
                start: days.start,
                train: days.end.saturating_sub(days.start),
                test: 0,
                len: self.n_days(),
            });
        }
        Self::new(
            self.assets.clone(),
            self.dates[days.clone()].to_vec(),
            self.returns.slice(ndarray::s![.., days]).to_owned(),
        )
    }

    /// Returns a copy with the returns matrix replaced (same labels).
    pub fn with_returns(&self, returns: Array2<f64>) -> Result<Self, PanelError> {
        Self::new(self.assets.clone(), self.dates.clone(), returns)
    }
}

/// Training and test window positions within a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub train_start: usize,
    pub train_len: usize,
    pub test_len: usize,
}

impl WindowSpec {
    pub fn new(train_start: usize, train_len: usize, test_len: usize) -> Self {
        Self {
            train_start,
            train_len,
            test_len,
        }
    }

    /// First test day.
    pub fn split(&self) -> usize {
        self.train_start + self.train_len
    }

    pub fn end(&self) -> usize {
        self.split() + self.test_len
    }
}

/// Reads a panel from a CSV file.
pub fn load_panel(path: impl AsRef<Path>) -> Result<ReturnsPanel, PanelError> {
    read_panel(File::open(path)?)
}

/// Parses `date,ASSET1,...` CSV from any reader.
pub fn read_panel<R: Read>(reader: R) -> Result<ReturnsPanel, PanelError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let assets: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_owned).collect();
    let m = assets.len();
    if m < 2 {
        return Err(PanelError::TooFewAssets(m));
    }

    let mut dates = Vec::new();
    let mut cells: Vec<f64> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let raw_date = record.get(0).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| PanelError::BadDate {
            row,
            value: raw_date.to_owned(),
        })?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(PanelError::NonMonotonicDates { row });
            }
        }
        dates.push(date);
        for column in 1..=m {
            let value = record
                .get(column)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or(PanelError::MissingCell { row, column })?;
            cells.push(value);
        }
        if record.len() > m + 1 {
            return Err(PanelError::MissingCell { row, column: m + 1 });
        }
    }
    let n = dates.len();
    if n < 2 {
        return Err(PanelError::TooFewSamples(n));
    }
    // cells are day-major; transpose to assets-as-rows
    let by_day = Array2::from_shape_vec((n, m), cells).expect("row lengths checked");
    ReturnsPanel::new(assets, dates, by_day.reversed_axes().as_standard_layout().into_owned())
}

/// Writes a panel as CSV using shortest round-trip decimal formatting.
pub fn write_panel<W: Write>(panel: &ReturnsPanel, writer: W) -> Result<(), PanelError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_owned()];
    header.extend(panel.assets.iter().cloned());
    wtr.write_record(&header)?;
    for (t, date) in panel.dates.iter().enumerate() {
        let mut row = vec![date.format("%Y-%m-%d").to_string()];
        row.extend(panel.returns.column(t).iter().map(|v| format!("{v:?}")));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_panel(panel: &ReturnsPanel, path: impl AsRef<Path>) -> Result<(), PanelError> {
    write_panel(panel, File::create(path)?)
}

/// Subtracts each asset's mean; returns the demeaned panel and the means.
pub fn demean(panel: &ReturnsPanel) -> (ReturnsPanel, Array1<f64>) {
    let means = panel.row_means();
    let mut centered = panel.returns.clone();
    for (mut row, mean) in centered.rows_mut().into_iter().zip(means.iter()) {
        row.mapv_inplace(|v| v - mean);
    }
    let out = ReturnsPanel {
        assets: panel.assets.clone(),
        dates: panel.dates.clone(),
        returns: centered,
    };
    (out, means)
}

/// Splits out the training and test segments described by `spec`.
pub fn slice_window(
    panel: &ReturnsPanel,
    spec: WindowSpec,
) -> Result<(ReturnsPanel, ReturnsPanel), PanelError> {
    let oob = PanelError::WindowOutOfBounds {
        start: spec.train_start,
        train: spec.train_len,
        test: spec.test_len,
        len: panel.n_days(),
    };
    if spec.train_len < 2 || spec.test_len < 1 || spec.end() > panel.n_days() {
        return Err(oob);
    }
    let train = panel.columns(spec.train_start..spec.split())?;
    // a one-day test segment is legal even though a standalone panel needs N ≥ 2
    let test = ReturnsPanel {
        assets: panel.assets.clone(),
        dates: panel.dates[spec.split()..spec.end()].to_vec(),
        returns: panel
            .returns
            .slice(ndarray::s![.., spec.split()..spec.end()])
            .to_owned(),
    };
    Ok((train, test))
}

fn weekdays_from(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut day = start;
    while out.len() < count {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(day);
        }
        day += Duration::days(1);
    }
    out
}
