//! Dataset files: CSV ingestion, the dermatology preprocessing, dataset and
//! matrix output, and flat `key = value` config files.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;

/// Which column, if any, holds the truth labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    None,
    Index(usize),
    /// Requires a header row.
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label_column: LabelColumn,
    /// Cells equal to this (after trimming) are recorded as missing.
    pub missing_token: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { has_header: false, label_column: LabelColumn::None, missing_token: "?".into() }
    }
}

/// A rectangular numeric table; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTable {
    pub header: Option<Vec<String>>,
    pub values: Vec<Vec<Option<f64>>>,
    /// Raw label cells, when a label column was requested.
    pub labels: Option<Vec<String>>,
}

impl RawTable {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// `(row, column)` of every missing cell, row-major.
    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        self.values
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().filter(|(_, v)| v.is_none()).map(move |(c, _)| (r, c)))
            .collect()
    }

    /// The values as a dense matrix; fails on any missing cell.
    pub fn dense(&self) -> Result<Vec<Vec<f64>>> {
        self.values
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(|(c, v)| v.ok_or_else(|| Error::Parse(format!("row {}, column {c}: missing value", r + 1))))
                    .collect()
            })
            .collect()
    }

    /// Label cells encoded as `0..k`; see [`encode_labels`].
    pub fn encoded_labels(&self) -> Result<Vec<usize>> {
        let labels = self.labels.as_ref().ok_or(Error::EmptyInput("label column"))?;
        encode_labels(labels)
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<RawTable> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, options)
}

/// Parses CSV from any reader.
pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let header = if options.has_header {
        Some(rdr.headers()?.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };
    let label_idx = match &options.label_column {
        LabelColumn::None => None,
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Name(name) => {
            let h = header.as_ref().ok_or_else(|| Error::InvalidParameter("label column by name needs a header".into()))?;
            Some(h.iter().position(|c| c == name).ok_or_else(|| Error::UnknownName(name.clone()))?)
        }
    };
    let mut values = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let line = r + 1 + usize::from(options.has_header);
        if let Some(li) = label_idx {
            if li >= record.len() {
                return Err(Error::IndexOutOfRange { index: li, n: record.len() });
            }
        }
        let mut row = Vec::with_capacity(record.len());
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_idx {
                if cell.is_empty() || cell == options.missing_token {
                    return Err(Error::Parse(format!("line {line}: missing label")));
                }
                labels.as_mut().expect("label column set").push(cell.to_string());
            } else if cell == options.missing_token {
                row.push(None);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {line}, column {c}: not a number: {cell:?}")))?;
                row.push(Some(v));
            }
        }
        values.push(row);
    }
    Ok(RawTable { header, values, labels })
}

/// Maps label strings to `0..k`. Non-negative integer labels keep their
/// numeric order; otherwise labels are ordered as strings.
pub fn encode_labels(labels: &[String]) -> Result<Vec<usize>> {
    let numeric: Option<Vec<u64>> = labels.iter().map(|l| l.parse::<u64>().ok()).collect();
    match numeric {
        Some(nums) => {
            let mut distinct = nums.clone();
            distinct.sort_unstable();
            distinct.dedup();
            Ok(nums.iter().map(|v| distinct.binary_search(v).expect("present")).collect())
        }
        None => {
            let mut distinct: Vec<&String> = labels.iter().collect();
            distinct.sort();
            distinct.dedup();
            Ok(labels.iter().map(|v| distinct.binary_search(&v).expect("present")).collect())
        }
    }
}

pub const DERMATOLOGY_ATTRIBUTES: usize = 34;
pub const DERMATOLOGY_CLASSES: usize = 6;
/// Zero-based column of the age attribute.
pub const DERMATOLOGY_AGE_COLUMN: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Replace missing cells by the mean of the observed cells of the column.
    #[default]
    MeanImpute,
    /// Remove rows with any missing cell.
    DropMissing,
}

/// Standardized features and zero-based class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// Loads the dermatology file: 34 attributes, then the class `1..=6`.
pub fn load_dermatology(path: impl AsRef<Path>) -> Result<RawTable> {
    load_csv(
        path,
        &CsvOptions { has_header: false, label_column: LabelColumn::Index(DERMATOLOGY_ATTRIBUTES), missing_token: "?".into() },
    )
}

/// Handles missing cells per `policy`, then standardizes each column to
/// mean 0 and population variance 1. Constant columns become 0.
pub fn preprocess_dermatology(table: &RawTable, policy: MissingPolicy) -> Result<PreparedData> {
    if table.cols() != DERMATOLOGY_ATTRIBUTES {
        return Err(Error::DimensionMismatch { expected: DERMATOLOGY_ATTRIBUTES, got: table.cols() });
    }
    let raw_labels = table.labels.as_ref().ok_or(Error::EmptyInput("class column"))?;
    let mut labels = Vec::with_capacity(raw_labels.len());
    for (r, l) in raw_labels.iter().enumerate() {
        match l.parse::<usize>() {
            Ok(c) if (1..=DERMATOLOGY_CLASSES).contains(&c) => labels.push(c - 1),
            _ => return Err(Error::Parse(format!("row {}: class {l:?} outside 1..=6", r + 1))),
        }
    }
    let (rows, labels): (Vec<&Vec<Option<f64>>>, Vec<usize>) = match policy {
        MissingPolicy::MeanImpute => (table.values.iter().collect(), labels),
        MissingPolicy::DropMissing => table
            .values
            .iter()
            .zip(labels)
            .filter(|(row, _)| row.iter().all(Option::is_some))
            .unzip(),
    };
    if rows.is_empty() {
        return Err(Error::EmptyInput("rows"));
    }
    let mut points: Vec<Vec<f64>> = vec![vec![0.0; DERMATOLOGY_ATTRIBUTES]; rows.len()];
    for c in 0..DERMATOLOGY_ATTRIBUTES {
        let observed: Vec<f64> = rows.iter().filter_map(|r| r[c]).collect();
        if observed.is_empty() {
            return Err(Error::Parse(format!("column {c} has no observed values")));
        }
        let fill = observed.iter().sum::<f64>() / observed.len() as f64;
        let column: Vec<f64> = rows.iter().map(|r| r[c].unwrap_or(fill)).collect();
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        for (p, v) in points.iter_mut().zip(&column) {
            p[c] = if sd > 0.0 { (v - mean) / sd } else { 0.0 };
        }
    }
    Ok(PreparedData { points, labels })
}

/// Writes points as CSV with 17 significant digits, so values parse back
/// exactly. The header is `x0,...,x{D-1}` plus `label` when labels are given.
pub fn write_dataset<W: Write>(out: W, points: &[Vec<f64>], labels: Option<&[usize]>) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != points.len() {
            return Err(Error::LengthMismatch { left: points.len(), right: l.len() });
        }
    }
    let dim = points.first().map_or(0, Vec::len);
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..dim).map(|d| format!("x{d}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    wtr.write_record(&header)?;
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        let mut record: Vec<String> = p.iter().map(|v| format_exact(*v)).collect();
        if let Some(l) = labels {
            record.push(l[i].to_string());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, points: &[Vec<f64>], labels: Option<&[usize]>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_dataset(std::io::BufWriter::new(file), points, labels)
}

/// Writes the Gram matrix as headerless CSV, one row per line.
pub fn write_gram<W: Write>(out: W, gram: &GramMatrix) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for i in 0..gram.n() {
        wtr.write_record(gram.row(i).iter().map(|v| format_exact(*v)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// 17 significant digits in scientific notation.
pub fn format_exact(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// skipped; a repeated key is an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", i + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(map)
}
