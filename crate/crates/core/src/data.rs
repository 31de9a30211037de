//! Datasets, CSV ingestion and emission, and block-maxima construction.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Covariate matrix (row-major) plus response vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    response: Vec<f64>,
    feature_names: Vec<String>,
    response_name: String,
}

impl Dataset {
    /// Builds a dataset from a row-major feature buffer of `response.len()` rows.
    pub fn new(
        features: Vec<f64>,
        response: Vec<f64>,
        feature_names: Vec<String>,
        response_name: impl Into<String>,
    ) -> Result<Self> {
        let n = response.len();
        let p = feature_names.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if p == 0 {
            return Err(Error::invalid(
                "a dataset needs at least one feature column",
            ));
        }
        if features.len() != n * p {
            return Err(Error::invalid(format!(
                "feature buffer holds {} values, expected {n} rows x {p} columns",
                features.len()
            )));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite response at row {i}")));
        }
        if let Some(k) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature at row {}, column `{}`",
                k / p,
                feature_names[k % p]
            )));
        }
        Ok(Self {
            features,
            response,
            feature_names,
            response_name: response_name.into(),
        })
    }

    pub fn from_rows(
        rows: &[Vec<f64>],
        response: Vec<f64>,
        feature_names: Vec<String>,
        response_name: impl Into<String>,
    ) -> Result<Self> {
        let p = feature_names.len();
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::invalid(format!(
                "row {i} does not have {p} features"
            )));
        }
        if rows.len() != response.len() {
            return Err(Error::invalid("row count differs from response length"));
        }
        let features = rows.iter().flatten().copied().collect();
        Self::new(features, response, feature_names, response_name)
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn p(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.features[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.p())
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    /// Rows `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.n() || range.start >= range.end {
            return Err(Error::invalid(format!(
                "row range {range:?} is empty or outside 0..{}",
                self.n()
            )));
        }
        let p = self.p();
        Self::new(
            self.features[range.start * p..range.end * p].to_vec(),
            self.response[range.clone()].to_vec(),
            self.feature_names.clone(),
            self.response_name.clone(),
        )
    }

    /// Splits into a leading training part and a trailing held-out part
    /// holding `holdout_fraction` of the rows (rounded down, at least one).
    pub fn split_holdout(&self, holdout_fraction: f64) -> Result<(Self, Self)> {
        if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
            return Err(Error::invalid("held-out fraction must lie in (0, 1)"));
        }
        let held = ((self.n() as f64 * holdout_fraction).floor() as usize).max(1);
        if held >= self.n() {
            return Err(Error::invalid("dataset too small to hold out rows"));
        }
        let cut = self.n() - held;
        Ok((self.slice(0..cut)?, self.slice(cut..self.n())?))
    }

    /// Appends `k` independent Uniform[-1, 1] noise covariates.
    pub fn with_uniform_noise(&self, k: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.p();
        let mut features = Vec::with_capacity(self.n() * (p + k));
        for row in self.rows() {
            features.extend_from_slice(row);
            for _ in 0..k {
                features.push(rng.random_range(-1.0..=1.0));
            }
        }
        let mut names = self.feature_names.clone();
        names.extend((1..=k).map(|j| format!("noise{j}")));
        Self::new(
            features,
            self.response.clone(),
            names,
            self.response_name.clone(),
        )
    }
}

/// Block maxima with the covariate row of each block's argmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMaxSample {
    features: Vec<f64>,
    maxima: Vec<f64>,
    block_size: usize,
    source_rows: Vec<usize>,
    feature_names: Vec<String>,
}

impl BlockMaxSample {
    pub fn n(&self) -> usize {
        self.maxima.len()
    }

    pub fn p(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let p = self.p();
        &self.features[k * p..(k + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.p())
    }

    pub fn maxima(&self) -> &[f64] {
        &self.maxima
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Blocks selected by index, in the given order. Source rows and block
    /// size are carried over.
    pub fn select(&self, blocks: &[usize]) -> Self {
        let p = self.p();
        let mut features = Vec::with_capacity(blocks.len() * p);
        for &k in blocks {
            features.extend_from_slice(self.row(k));
        }
        Self {
            features,
            maxima: blocks.iter().map(|&k| self.maxima[k]).collect(),
            block_size: self.block_size,
            source_rows: blocks.iter().map(|&k| self.source_rows[k]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Builds a sample directly from per-block rows and maxima, for callers
    /// that generate maxima themselves.
    pub fn from_parts(
        features: Vec<f64>,
        maxima: Vec<f64>,
        block_size: usize,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let p = feature_names.len();
        if p == 0 || features.len() != maxima.len() * p {
            return Err(Error::invalid(
                "feature buffer does not match maxima length",
            ));
        }
        if block_size == 0 {
            return Err(Error::invalid("block size must be at least 1"));
        }
        if features.iter().chain(&maxima).any(|v| !v.is_finite()) {
            return Err(Error::invalid("block sample contains non-finite values"));
        }
        let source_rows = (0..maxima.len()).map(|k| k * block_size).collect();
        Ok(Self {
            features,
            maxima,
            block_size,
            source_rows,
            feature_names,
        })
    }
}

/// Splits `ds` into consecutive blocks of `m` rows and keeps each block's
/// maximum response with its covariate row. Trailing rows that do not fill a
/// block are dropped; ties go to the earliest row.
pub fn make_blocks(ds: &Dataset, m: usize) -> Result<BlockMaxSample> {
    if m == 0 {
        return Err(Error::invalid("block size must be at least 1"));
    }
    if m > ds.n() {
        return Err(Error::BlockSizeTooLarge {
            block_size: m,
            rows: ds.n(),
        });
    }
    let n_blocks = ds.n() / m;
    let p = ds.p();
    let mut features = Vec::with_capacity(n_blocks * p);
    let mut maxima = Vec::with_capacity(n_blocks);
    let mut source_rows = Vec::with_capacity(n_blocks);
    for block in ds.response()[..n_blocks * m].chunks_exact(m).enumerate() {
        let (k, values) = block;
        let mut best = 0;
        for (j, &v) in values.iter().enumerate().skip(1) {
            if v > values[best] {
                best = j;
            }
        }
        let row = k * m + best;
        maxima.push(values[best]);
        source_rows.push(row);
        features.extend_from_slice(ds.row(row));
    }
    Ok(BlockMaxSample {
        features,
        maxima,
        block_size: m,
        source_rows,
        feature_names: ds.feature_names().to_vec(),
    })
}

/// Reads the named columns of a CSV file. Zero data rows are allowed.
pub fn read_columns(path: impl AsRef<Path>, columns: &[String]) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let index: Vec<usize> = columns
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); columns.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (c, &j) in index.iter().enumerate() {
            let cell = record.get(j).unwrap_or("").trim();
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: columns[c].clone(),
                    value: cell.to_string(),
                })?;
            out[c].push(value);
        }
    }
    Ok(out)
}

/// Reads a dataset with `response_column` as response and `feature_columns`
/// as covariates, rows in file order.
pub fn read_csv(
    path: impl AsRef<Path>,
    response_column: &str,
    feature_columns: &[String],
) -> Result<Dataset> {
    if feature_columns.is_empty() {
        return Err(Error::invalid("no feature columns selected"));
    }
    let mut names = feature_columns.to_vec();
    names.push(response_column.to_string());
    let mut columns = read_columns(path, &names)?;
    let response = columns.pop().unwrap_or_default();
    if response.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = response.len();
    let p = feature_columns.len();
    let mut features = vec![0.0; n * p];
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            features[i * p + j] = v;
        }
    }
    Dataset::new(
        features,
        response,
        feature_columns.to_vec(),
        response_column,
    )
}

/// Header names of a CSV file.
pub fn read_header(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    Ok(reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Real(Vec<f64>),
    Int(Vec<i64>),
    Text(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Real(v) => v.len(),
            Column::Int(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    fn cell(&self, i: usize) -> String {
        match self {
            Column::Real(v) => format_real(v[i]),
            Column::Int(v) => v[i].to_string(),
            Column::Text(v) => v[i].clone(),
        }
    }
}

/// Named columns for CSV output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    columns: Vec<(String, Column)>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn real(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.columns.push((name.into(), Column::Real(values)));
        self
    }

    pub fn int(mut self, name: impl Into<String>, values: Vec<i64>) -> Self {
        self.columns.push((name.into(), Column::Int(values)));
        self
    }

    pub fn text(mut self, name: impl Into<String>, values: Vec<String>) -> Self {
        self.columns.push((name.into(), Column::Text(values)));
        self
    }

    pub fn push(&mut self, name: impl Into<String>, column: Column) {
        self.columns.push((name.into(), column));
    }

    pub fn headers(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    /// Row count; errors if the columns are ragged.
    pub fn row_count(&self) -> Result<usize> {
        let mut lens = self.columns.iter().map(|(_, c)| c.len());
        let first = lens.next().unwrap_or(0);
        if lens.any(|l| l != first) {
            return Err(Error::invalid("table columns have different lengths"));
        }
        Ok(first)
    }

    /// Table rows rendered as CSV cells.
    pub fn records(&self) -> Result<Vec<Vec<String>>> {
        let n = self.row_count()?;
        Ok((0..n)
            .map(|i| self.columns.iter().map(|(_, c)| c.cell(i)).collect())
            .collect())
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        let mut table = Table::new();
        for (j, name) in ds.feature_names().iter().enumerate() {
            table = table.real(name.clone(), ds.rows().map(|r| r[j]).collect());
        }
        table.real(ds.response_name().to_string(), ds.response().to_vec())
    }
}

/// Shortest representation that parses back to the same bits.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let records = table.records()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(table.headers())?;
    for record in records {
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Appends table rows (no header) to an open CSV sink and flushes.
pub fn append_csv_rows<W: Write>(writer: &mut csv::Writer<W>, table: &Table) -> Result<()> {
    for record in table.records()? {
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

/// Daily records keyed by calendar date; cells may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct DatedRecords {
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    /// `values[i][j]` is column `names[j]` on `dates[i]`.
    pub values: Vec<Vec<Option<f64>>>,
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null" | "." | "-"
    )
}

/// Reads a CSV with an ISO `date_column` and numeric `columns`, keeping
/// missing cells (empty, NA, NaN) as `None`.
pub fn read_dated_csv(
    path: impl AsRef<Path>,
    date_column: &str,
    columns: &[String],
) -> Result<DatedRecords> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_idx = find(date_column)?;
    let idx: Vec<usize> = columns.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let raw = record.get(date_idx).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| Error::Parse {
            row,
            column: date_column.to_string(),
            value: raw.to_string(),
        })?;
        let mut cells = Vec::with_capacity(idx.len());
        for (c, &j) in idx.iter().enumerate() {
            let cell = record.get(j).unwrap_or("").trim();
            if is_missing(cell) {
                cells.push(None);
                continue;
            }
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: columns[c].clone(),
                    value: cell.to_string(),
                })?;
            cells.push(Some(v));
        }
        dates.push(date);
        values.push(cells);
    }
    Ok(DatedRecords {
        dates,
        names: columns.to_vec(),
        values,
    })
}

/// Meteorological season: 1 winter (Dec-Feb), 2 spring, 3 summer, 4 fall.
pub fn season_of(date: NaiveDate) -> u8 {
    match date.month() {
        12 | 1 | 2 => 1,
        3..=5 => 2,
        6..=8 => 3,
        _ => 4,
    }
}

/// Adds `season` and the previous day's response (`lag1_<response>`) as
/// covariates. The first row and every row with a missing value are dropped;
/// the lag is missing when the preceding record is not the previous day.
pub fn build_weather_features(raw: &DatedRecords, response: &str) -> Result<Dataset> {
    let n = raw.dates.len();
    if n < 2 {
        return Err(Error::invalid("weather features need at least 2 rows"));
    }
    if let Some(i) = (1..n).find(|&i| raw.dates[i] <= raw.dates[i - 1]) {
        return Err(Error::UnorderedDates { row: i });
    }
    let resp = raw
        .names
        .iter()
        .position(|c| c == response)
        .ok_or_else(|| Error::MissingColumn(response.to_string()))?;
    let others: Vec<usize> = (0..raw.names.len()).filter(|&j| j != resp).collect();

    let mut names: Vec<String> = others.iter().map(|&j| raw.names[j].clone()).collect();
    names.push("season".to_string());
    names.push(format!("lag1_{response}"));

    let mut features = Vec::new();
    let mut y = Vec::new();
    'rows: for i in 1..n {
        let consecutive = raw.dates[i].pred_opt() == Some(raw.dates[i - 1]);
        let lag = if consecutive {
            raw.values[i - 1][resp]
        } else {
            None
        };
        let (Some(lag), Some(target)) = (lag, raw.values[i][resp]) else {
            continue;
        };
        let mut row = Vec::with_capacity(names.len());
        for &j in &others {
            match raw.values[i][j] {
                Some(v) => row.push(v),
                None => continue 'rows,
            }
        }
        row.push(f64::from(season_of(raw.dates[i])));
        row.push(lag);
        features.extend(row);
        y.push(target);
    }
    Dataset::new(features, y, names, response)
}
