//! Transaction databases loaded from CSV, with per-column schema inference.
//!
//! A column is numeric when every one of its cells parses as a finite real
//! number; otherwise it is categorical and its categories are kept in
//! first-appearance order. Column order in the file is the canonical
//! attribute order used by the rule codec.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset file not found: {}", .0.display())]
    MissingFile(PathBuf),
    /// `line` is the one-based line of the offending record.
    #[error("ragged rows: line {line} has {found} fields, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset has no data rows")]
    EmptyDataset,
    /// `line` and `column` are one-based.
    #[error("missing value at line {line}, column {column}")]
    MissingValue { line: usize, column: usize },
    #[error("attribute index {index} out of range (database has {len} attributes)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("dropping the requested columns would leave no attributes")]
    NoAttributes,
    #[error("invalid database: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Whether an attribute is numeric or categorical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

/// The value domain of one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Numeric { min: f64, max: f64 },
    Categorical { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub domain: Domain,
}

impl Attribute {
    pub fn kind(&self) -> AttributeKind {
        match self.domain {
            Domain::Numeric { .. } => AttributeKind::Numeric,
            Domain::Categorical { .. } => AttributeKind::Categorical,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.domain, Domain::Numeric { .. })
    }
}

/// A single cell. Categorical cells hold an index into the attribute's
/// category list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(usize),
}

impl Value {
    pub fn as_num(self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(v),
            Value::Cat(_) => None,
        }
    }
}

/// An immutable table of transactions over a fixed attribute schema.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionDatabase {
    attributes: Vec<Attribute>,
    rows: Vec<Vec<Value>>,
}

impl TransactionDatabase {
    /// Builds a database, checking every schema invariant.
    pub fn new(attributes: Vec<Attribute>, rows: Vec<Vec<Value>>) -> Result<Self, DatasetError> {
        if rows.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        if attributes.is_empty() {
            return Err(DatasetError::Invalid("no attributes".into()));
        }
        for attr in &attributes {
            match &attr.domain {
                Domain::Numeric { min, max } => {
                    if !(min.is_finite() && max.is_finite() && min <= max) {
                        return Err(DatasetError::Invalid(format!(
                            "attribute '{}' has invalid numeric domain [{min}, {max}]",
                            attr.name
                        )));
                    }
                }
                Domain::Categorical { categories } => {
                    if categories.is_empty() {
                        return Err(DatasetError::Invalid(format!(
                            "attribute '{}' has no categories",
                            attr.name
                        )));
                    }
                    let mut seen = std::collections::HashSet::new();
                    if !categories.iter().all(|c| seen.insert(c)) {
                        return Err(DatasetError::Invalid(format!(
                            "attribute '{}' has duplicate categories",
                            attr.name
                        )));
                    }
                }
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != attributes.len() {
                return Err(DatasetError::Invalid(format!(
                    "row {} has {} values, expected {}",
                    r + 1,
                    row.len(),
                    attributes.len()
                )));
            }
            for (attr, cell) in attributes.iter().zip(row) {
                let ok = match (&attr.domain, cell) {
                    (Domain::Numeric { min, max }, Value::Num(v)) => {
                        v.is_finite() && *min <= *v && *v <= *max
                    }
                    (Domain::Categorical { categories }, Value::Cat(c)) => *c < categories.len(),
                    _ => false,
                };
                if !ok {
                    return Err(DatasetError::Invalid(format!(
                        "data row {r}: cell {cell:?} outside domain of '{}'",
                        attr.name
                    )));
                }
            }
        }
        Ok(TransactionDatabase { attributes, rows })
    }

    /// Builds a database from cells, recomputing numeric min/max from the data.
    /// Categorical domains are kept as given.
    pub(crate) fn with_recomputed_domains(
        attributes: Vec<Attribute>,
        rows: Vec<Vec<Value>>,
    ) -> Self {
        let mut attributes = attributes;
        for (j, attr) in attributes.iter_mut().enumerate() {
            if let Domain::Numeric { min, max } = &mut attr.domain {
                let (lo, hi) = rows
                    .iter()
                    .filter_map(|r| r[j].as_num())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                *min = lo;
                *max = hi;
            }
        }
        debug_assert!(!rows.is_empty());
        TransactionDatabase { attributes, rows }
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn n_transactions(&self) -> usize {
        self.rows.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    /// The stored domain of attribute `index`.
    pub fn attribute_domain(&self, index: usize) -> Result<&Domain, DatasetError> {
        self.attributes
            .get(index)
            .map(|a| &a.domain)
            .ok_or(DatasetError::IndexOutOfRange {
                index,
                len: self.attributes.len(),
            })
    }

    /// Numeric values of one column. Panics if the column is categorical.
    pub(crate) fn numeric_column(&self, index: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r[index].as_num().expect("numeric column"))
            .collect()
    }

    /// Keeps only the attributes at `keep` (ascending indices).
    pub(crate) fn project(&self, keep: &[usize]) -> Self {
        let attributes = keep.iter().map(|&j| self.attributes[j].clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| keep.iter().map(|&j| r[j]).collect())
            .collect();
        TransactionDatabase { attributes, rows }
    }

    /// Removes the named columns.
    pub fn drop_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, DatasetError> {
        for name in names {
            if !self.attributes.iter().any(|a| a.name == name.as_ref()) {
                return Err(DatasetError::UnknownColumn(name.as_ref().to_string()));
            }
        }
        let keep: Vec<usize> = (0..self.attributes.len())
            .filter(|&j| !names.iter().any(|n| n.as_ref() == self.attributes[j].name))
            .collect();
        if keep.is_empty() {
            return Err(DatasetError::NoAttributes);
        }
        Ok(self.project(&keep))
    }

    /// Writes the database as CSV. Numeric cells use the shortest
    /// representation that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W, header: bool) -> Result<(), DatasetError> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        if header {
            w.write_record(self.attributes.iter().map(|a| a.name.as_str()))?;
        }
        for row in &self.rows {
            let cells =
                self.attributes
                    .iter()
                    .zip(row)
                    .map(|(attr, cell)| match (cell, &attr.domain) {
                        (Value::Num(v), _) => v.to_string(),
                        (Value::Cat(c), Domain::Categorical { categories }) => {
                            categories[*c].clone()
                        }
                        (Value::Cat(c), _) => c.to_string(),
                    });
            w.write_record(cells)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses CSV text into a database, inferring the schema.
pub fn parse_csv<R: Read>(reader: R, header: bool) -> Result<TransactionDatabase, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let mut names: Option<Vec<String>> = None;
    if header {
        match records.next() {
            Some(rec) => names = Some(rec?.iter().map(str::to_string).collect()),
            None => return Err(DatasetError::EmptyDataset),
        }
    }

    let mut cells: Vec<Vec<String>> = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let width = names
            .as_ref()
            .map(Vec::len)
            .or_else(|| cells.first().map(Vec::len))
            .unwrap_or(rec.len());
        if rec.len() != width {
            return Err(DatasetError::RaggedRows {
                line,
                expected: width,
                found: rec.len(),
            });
        }
        if let Some(column) = rec.iter().position(|c| c.trim().is_empty()) {
            return Err(DatasetError::MissingValue {
                line,
                column: column + 1,
            });
        }
        cells.push(rec.iter().map(str::to_string).collect());
    }
    if cells.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let width = cells[0].len();
    let names = names.unwrap_or_else(|| (0..width).map(|j| format!("col{j}")).collect());

    let mut attributes = Vec::with_capacity(width);
    let mut columns: Vec<Vec<Value>> = Vec::with_capacity(width);
    for (j, name) in names.into_iter().enumerate() {
        let parsed: Option<Vec<f64>> = cells.iter().map(|r| parse_finite(&r[j])).collect();
        match parsed {
            Some(values) => {
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                attributes.push(Attribute {
                    name,
                    domain: Domain::Numeric { min, max },
                });
                columns.push(values.into_iter().map(Value::Num).collect());
            }
            None => {
                let mut categories: Vec<String> = Vec::new();
                let mut index = std::collections::HashMap::new();
                let column = cells
                    .iter()
                    .map(|r| {
                        let v = &r[j];
                        let c = *index.entry(v.clone()).or_insert_with(|| {
                            categories.push(v.clone());
                            categories.len() - 1
                        });
                        Value::Cat(c)
                    })
                    .collect();
                attributes.push(Attribute {
                    name,
                    domain: Domain::Categorical { categories },
                });
                columns.push(column);
            }
        }
    }
    let rows = (0..cells.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    TransactionDatabase::new(attributes, rows)
}

/// Loads a CSV file from disk.
pub fn load_csv<P: AsRef<Path>>(
    path: P,
    header: bool,
) -> Result<TransactionDatabase, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DatasetError::MissingFile(path.to_path_buf()),
        _ => DatasetError::Io(e),
    })?;
    parse_csv(std::io::BufReader::new(file), header)
}
