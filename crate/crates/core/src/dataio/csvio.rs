//! CSV ingestion and dataset dumps.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::dataio::DiscreteDataset;
use crate::error::{Error, Result};

/// Per-column kind: either inferred from the cells or forced by a schema hint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// One ingested column, before discretization.
#[derive(Debug, Clone, PartialEq)]
pub enum RawColumn {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl RawColumn {
    pub fn kind(&self) -> ColumnKind {
        match self {
            RawColumn::Numeric(_) => ColumnKind::Numeric,
            RawColumn::Categorical(_) => ColumnKind::Categorical,
        }
    }
}

/// A column-oriented raw table: header names plus typed columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub names: Vec<String>,
    pub columns: Vec<RawColumn>,
    pub n_rows: usize,
}

/// Reads a UTF-8, comma-separated file with a mandatory header row.
///
/// Column kinds are inferred (numeric when every cell parses as a finite
/// number, categorical otherwise) unless overridden per name in `schema`.
/// Ragged rows and empty cells are rejected: learning expects complete
/// data, and gap recovery hides values internally rather than at load time.
pub fn read_csv(path: &Path, schema: Option<&BTreeMap<String, ColumnKind>>) -> Result<RawTable> {
    let file = std::fs::File::open(path)?;
    read_csv_reader(file, schema)
}

/// Same as [`read_csv`] for any reader; used by tests and in-memory callers.
pub fn read_csv_reader<R: Read>(
    reader: R,
    schema: Option<&BTreeMap<String, ColumnKind>>,
) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers: Vec<String> = {
        let h = rdr.headers().map_err(|e| Error::CsvStructure {
            message: e.to_string(),
            row: None,
        })?;
        if h.is_empty() || (h.len() == 1 && h[0].is_empty()) {
            return Err(Error::CsvStructure {
                message: "empty file: header row required".into(),
                row: None,
            });
        }
        h.iter().map(|s| s.to_string()).collect()
    };
    let width = headers.len();

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); width];
    let mut n_rows = 0usize;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::CsvStructure {
            message: e.to_string(),
            row: Some(i),
        })?;
        if record.len() != width {
            return Err(Error::CsvStructure {
                message: format!("row has {} fields, expected {width}", record.len()),
                row: Some(i),
            });
        }
        for (j, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::MissingValue {
                    row: i,
                    column: headers[j].clone(),
                });
            }
            cells[j].push(field.to_string());
        }
        n_rows += 1;
    }

    let mut columns = Vec::with_capacity(width);
    for (j, name) in headers.iter().enumerate() {
        let hinted = schema.and_then(|s| s.get(name)).copied();
        let kind = match hinted {
            Some(k) => k,
            None => infer_kind(&cells[j]),
        };
        let col = match kind {
            ColumnKind::Numeric => {
                let mut vals = Vec::with_capacity(cells[j].len());
                for (r, cell) in cells[j].iter().enumerate() {
                    match parse_finite(cell) {
                        Some(v) => vals.push(v),
                        None => {
                            return Err(Error::NumericParse {
                                row: r,
                                column: name.clone(),
                                value: cell.clone(),
                            })
                        }
                    }
                }
                RawColumn::Numeric(vals)
            }
            ColumnKind::Categorical => RawColumn::Categorical(std::mem::take(&mut cells[j])),
        };
        columns.push(col);
    }

    Ok(RawTable {
        names: headers,
        columns,
        n_rows,
    })
}

fn parse_finite(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn infer_kind(cells: &[String]) -> ColumnKind {
    if !cells.is_empty() && cells.iter().all(|c| parse_finite(c).is_some()) {
        ColumnKind::Numeric
    } else {
        ColumnKind::Categorical
    }
}

/// Dumps a dataset as a CSV of integer codes with a header row. Byte-exact
/// for a given dataset, so sampled dumps reproduce bit-identically per seed.
pub fn write_dataset_csv<W: std::io::Write>(data: &DiscreteDataset, mut out: W) -> Result<()> {
    writeln!(out, "{}", data.names().join(","))?;
    let mut line = String::new();
    for r in 0..data.n_rows() {
        line.clear();
        for j in 0..data.n_vars() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&data.column(j)[r].to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
