//! Data frames, model formulas and design matrices with treatment contrasts.

mod design;
mod formula;
mod generate;

pub use design::{build_design, Design};
pub use formula::{ModelSpec, Term};
pub use generate::{generate, parse_factors, parse_list, FactorSpec, GenSpec};

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Continuous(Vec<f64>),
    /// `levels` in order of first appearance; `codes[i]` indexes `levels`.
    Factor { levels: Vec<String>, codes: Vec<usize> },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Continuous(v) => v.len(),
            ColumnData::Factor { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Encodes labels as a factor, levels ordered by first appearance.
    pub fn factor_from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut levels: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref();
            if label.is_empty() {
                return Err(Error::Parse("empty factor level".into()));
            }
            let code = match levels.iter().position(|l| l == label) {
                Some(c) => c,
                None => {
                    levels.push(label.to_string());
                    levels.len() - 1
                }
            };
            codes.push(code);
        }
        Ok(ColumnData::Factor { levels, codes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataFrame {
    columns: Vec<Column>,
}

impl DataFrame {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Parse(format!("duplicate column `{}`", c.name)));
            }
        }
        if let Some(first) = columns.first() {
            let n = first.data.len();
            if let Some(bad) = columns.iter().find(|c| c.data.len() != n) {
                return Err(Error::Dimension(format!(
                    "column `{}` has {} rows, expected {n}",
                    bad.name,
                    bad.data.len()
                )));
            }
        }
        Ok(DataFrame { columns })
    }

    pub fn nrows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.data.len())
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Parses comma-separated text with a header row.
    ///
    /// A column becomes continuous when every value parses as a finite number
    /// and its name is not listed in `factors`; otherwise it is a factor.
    /// Empty fields are treated as missing values and rejected.
    pub fn from_csv<R: Read>(reader: R, factors: &[String]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if headers.is_empty() || headers.iter().any(|h| h.is_empty()) {
            return Err(Error::Parse("header row has an empty column name".into()));
        }
        for f in factors {
            if !headers.contains(f) {
                return Err(Error::UnknownColumn(f.clone()));
            }
        }
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            for (j, field) in record.iter().enumerate() {
                let field = field.trim();
                if field.is_empty() || field.eq_ignore_ascii_case("na") {
                    return Err(Error::Parse(format!(
                        "missing value in column `{}` at data row {}",
                        headers[j],
                        line + 1
                    )));
                }
                raw[j].push(field.to_string());
            }
        }
        let columns = headers
            .into_iter()
            .zip(raw)
            .map(|(name, values)| {
                let forced = factors.contains(&name);
                let numeric: Option<Vec<f64>> = if forced {
                    None
                } else {
                    values
                        .iter()
                        .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                        .collect()
                };
                let data = match numeric {
                    Some(v) => ColumnData::Continuous(v),
                    None => ColumnData::factor_from_labels(&values)?,
                };
                Ok(Column { name, data })
            })
            .collect::<Result<Vec<_>>>()?;
        DataFrame::new(columns)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for i in 0..self.nrows() {
            let record: Vec<String> = self
                .columns
                .iter()
                .map(|c| match &c.data {
                    ColumnData::Continuous(v) => format!("{}", v[i]),
                    ColumnData::Factor { levels, codes } => levels[codes[i]].clone(),
                })
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}
