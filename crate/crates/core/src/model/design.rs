use super::{ColumnData, DataFrame, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const INTERCEPT_NAME: &str = "(Intercept)";

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub column_names: Vec<String>,
}

/// Columns generated by one term component before forming products.
struct Block {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
}

fn component_block(df: &DataFrame, name: &str) -> Result<Block> {
    let col = df.column(name)?;
    match &col.data {
        ColumnData::Continuous(v) => Ok(Block {
            names: vec![name.to_string()],
            values: vec![v.clone()],
        }),
        ColumnData::Factor { levels, codes } => {
            if levels.len() < 2 {
                return Err(Error::SingleLevelFactor(name.to_string()));
            }
            // treatment contrasts: the first level is the reference
            let mut names = Vec::with_capacity(levels.len() - 1);
            let mut values = Vec::with_capacity(levels.len() - 1);
            for (code, level) in levels.iter().enumerate().skip(1) {
                names.push(format!("{name}{level}"));
                values.push(codes.iter().map(|&c| (c == code) as u8 as f64).collect());
            }
            Ok(Block { names, values })
        }
    }
}

/// Builds the design matrix for `spec` with treatment contrasts.
///
/// The intercept comes first. A factor with `L` levels contributes `L − 1`
/// indicator columns with the first level (in file order) as reference; an
/// interaction contributes the elementwise products of its components'
/// columns, so `continuous × factor` yields `L − 1` gated copies of the
/// continuous variable.
pub fn build_design(df: &DataFrame, spec: &ModelSpec) -> Result<Design> {
    let n = df.nrows();
    let y = match &df.column(&spec.response)?.data {
        ColumnData::Continuous(v) => v.clone(),
        ColumnData::Factor { .. } => {
            return Err(Error::Parse(format!(
                "response `{}` is not numeric",
                spec.response
            )))
        }
    };
    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if spec.intercept {
        names.push(INTERCEPT_NAME.to_string());
        columns.push(vec![1.0; n]);
    }
    for term in &spec.terms {
        if term.columns().contains(&spec.response) {
            return Err(Error::Parse(format!(
                "term `{term}` uses the response `{}`",
                spec.response
            )));
        }
        let mut acc = Block {
            names: vec![String::new()],
            values: vec![vec![1.0; n]],
        };
        for comp in term.columns() {
            let b = component_block(df, comp)?;
            let mut next = Block {
                names: Vec::new(),
                values: Vec::new(),
            };
            for (an, av) in acc.names.iter().zip(&acc.values) {
                for (bn, bv) in b.names.iter().zip(&b.values) {
                    next.names.push(if an.is_empty() {
                        bn.clone()
                    } else {
                        format!("{an}:{bn}")
                    });
                    next.values.push(av.iter().zip(bv).map(|(a, b)| a * b).collect());
                }
            }
            acc = next;
        }
        names.extend(acc.names);
        columns.extend(acc.values);
    }
    if columns.is_empty() {
        return Err(Error::Parse("model has no columns".into()));
    }
    if n == 0 {
        return Err(Error::Dimension("data frame has no rows".into()));
    }
    Ok(Design {
        x: Matrix::from_columns(&columns)?,
        y,
        column_names: names,
    })
}
