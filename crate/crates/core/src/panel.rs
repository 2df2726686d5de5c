//! Multivariate time panels and their wide CSV format.
//!
//! The CSV layout is: a header row whose first cell names the time-label
//! column and whose remaining cells name the series, followed by one row per
//! time point. Numbers are written in plain fixed notation rounded to 12
//! significant digits, LF line endings, so identical panels always
//! serialize to identical bytes.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimePanel {
    /// `p x T`: row `i` is series `i`, column `t` is the observation vector at time `t`.
    values: DMatrix<f64>,
    series_names: Vec<String>,
    time_labels: Vec<String>,
    label_header: String,
    periodicity: usize,
}

impl TimePanel {
    pub fn new(
        values: DMatrix<f64>,
        series_names: Vec<String>,
        time_labels: Vec<String>,
        periodicity: usize,
    ) -> Result<Self> {
        let (p, t) = values.shape();
        if p < 1 {
            return Err(Error::InvalidPanel("panel needs at least one series".into()));
        }
        if t < 2 {
            return Err(Error::InvalidPanel(format!(
                "panel needs at least two time points, got {t}"
            )));
        }
        if series_names.len() != p {
            return Err(Error::InvalidPanel(format!(
                "{} series names for {p} series",
                series_names.len()
            )));
        }
        if time_labels.len() != t {
            return Err(Error::InvalidPanel(format!(
                "{} time labels for {t} time points",
                time_labels.len()
            )));
        }
        if periodicity < 2 {
            return Err(Error::InvalidPanel(format!(
                "periodicity must be at least 2, got {periodicity}"
            )));
        }
        if let Some(idx) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidPanel(format!(
                "non-finite value for series {} at time index {}",
                idx % p,
                idx / p
            )));
        }
        Ok(Self {
            values,
            series_names,
            time_labels,
            label_header: "time".to_string(),
            periodicity,
        })
    }

    /// Panel with generated names `y1..yp` and integer time labels `1..T`.
    pub fn from_matrix(values: DMatrix<f64>, periodicity: usize) -> Result<Self> {
        let (p, t) = values.shape();
        let names = (1..=p).map(|i| format!("y{i}")).collect();
        let labels = (1..=t).map(|i| i.to_string()).collect();
        Self::new(values, names, labels, periodicity)
    }

    pub fn with_label_header(mut self, header: impl Into<String>) -> Self {
        self.label_header = header.into();
        self
    }

    /// Same metadata, different values (used for component panels).
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        let mut out = Self::new(
            values,
            self.series_names.clone(),
            self.time_labels.clone(),
            self.periodicity,
        )?;
        out.label_header = self.label_header.clone();
        Ok(out)
    }

    /// Leading `len` time points.
    pub fn head(&self, len: usize) -> Result<Self> {
        if len > self.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot take {len} of {} time points",
                self.len()
            )));
        }
        let mut out = Self::new(
            self.values.columns(0, len).into_owned(),
            self.series_names.clone(),
            self.time_labels[..len].to_vec(),
            self.periodicity,
        )?;
        out.label_header = self.label_header.clone();
        Ok(out)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn series(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    pub fn n_series(&self) -> usize {
        self.values.nrows()
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn series_names(&self) -> &[String] {
        &self.series_names
    }

    pub fn time_labels(&self) -> &[String] {
        &self.time_labels
    }

    pub fn label_header(&self) -> &str {
        &self.label_header
    }

    pub fn periodicity(&self) -> usize {
        self.periodicity
    }

    pub fn to_csv_string(&self) -> String {
        let mut header = Vec::with_capacity(self.n_series() + 1);
        header.push(self.label_header.clone());
        header.extend(self.series_names.iter().cloned());
        let rows = (0..self.len()).map(|t| {
            (
                self.time_labels[t].clone(),
                self.values.column(t).iter().copied().collect::<Vec<_>>(),
            )
        });
        table_to_csv(&header, rows)
    }
}

/// Read a wide CSV panel. Rows and columns in errors are 1-based; the row
/// counts data rows (the header is row 0) and the column counts every field,
/// so the first series is column 2.
pub fn read_csv(path: impl AsRef<Path>, periodicity: usize) -> Result<TimePanel> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path)?;
    parse_csv(&bytes, periodicity)
}

pub fn parse_csv(bytes: &[u8], periodicity: usize) -> Result<TimePanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| csv_error(0, e))?,
        None => return Err(Error::InvalidPanel("empty file".into())),
    };
    let width = header.len();
    if width < 2 {
        return Err(Error::InvalidPanel(
            "header needs a time-label column and at least one series".into(),
        ));
    }
    let label_header = header[0].to_string();
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();

    let mut labels = Vec::new();
    let mut columns: Vec<f64> = Vec::new();
    for (idx, rec) in records.enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| csv_error(row, e))?;
        if rec.len() != width {
            return Err(Error::RaggedRows {
                row,
                expected: width,
                found: rec.len(),
            });
        }
        labels.push(rec[0].to_string());
        for (j, cell) in rec.iter().enumerate().skip(1) {
            columns.push(parse_cell(cell, row, j + 1)?);
        }
    }
    let p = width - 1;
    let t = labels.len();
    // `columns` holds one observation vector per row, i.e. column-major p x T.
    let values = DMatrix::from_column_slice(p, t, &columns);
    Ok(TimePanel::new(values, names, labels, periodicity)?.with_label_header(label_header))
}

fn csv_error(row: usize, e: csv::Error) -> Error {
    Error::Parse {
        row,
        col: 0,
        msg: e.to_string(),
    }
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64> {
    let trimmed = cell.trim();
    let bad = |msg: String| Error::Parse { row, col, msg };
    if trimmed.is_empty() {
        return Err(bad("missing value".into()));
    }
    // Rust accepts "inf"/"NaN"; only plain decimals are valid here.
    if !trimmed
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
    {
        return Err(bad(format!("not a decimal number: {cell:?}")));
    }
    let v: f64 = trimmed
        .parse()
        .map_err(|_| bad(format!("not a decimal number: {cell:?}")))?;
    if !v.is_finite() {
        return Err(bad(format!("non-finite value: {cell:?}")));
    }
    Ok(v)
}

/// Write a panel, creating or truncating `path`.
pub fn write_csv(panel: &TimePanel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, panel.to_csv_string())?;
    Ok(())
}

/// Fixed-notation rendering rounded to 12 significant digits.
pub fn format_fixed12(x: f64) -> String {
    debug_assert!(x.is_finite());
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if digits.bytes().all(|b| b == b'0') {
        return "0.00000000000".to_string();
    }
    let mut out = String::with_capacity(24);
    if negative {
        out.push('-');
    }
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    }
    out
}

/// Render a table: a header row, then rows of a label followed by numbers.
pub fn table_to_csv<I>(header: &[String], rows: I) -> String
where
    I: IntoIterator<Item = (String, Vec<f64>)>,
{
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for (label, values) in rows {
        let mut record = Vec::with_capacity(values.len() + 1);
        record.push(label);
        record.extend(values.iter().map(|v| format_fixed12(*v)));
        writer.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// A matrix as CSV with one labelled row per matrix row.
pub fn matrix_to_csv(corner: &str, row_labels: &[String], col_labels: &[String], m: &DMatrix<f64>) -> String {
    let mut header = vec![corner.to_string()];
    header.extend(col_labels.iter().cloned());
    let rows = (0..m.nrows()).map(|i| (row_labels[i].clone(), m.row(i).iter().copied().collect()));
    table_to_csv(&header, rows)
}
