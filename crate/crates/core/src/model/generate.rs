use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{build_design, Column, ColumnData, DataFrame, ModelSpec, Term};
use crate::error::{Error, Result};

/// Level frequencies of one generated factor. The level count is
/// `frequencies.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSpec {
    pub frequencies: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub factors: Vec<FactorSpec>,
    pub continuous_count: usize,
    /// Coefficients for `y ~ f1 + … + x1 + …`; `None` uses `1, 2, …, p`.
    pub true_beta: Option<Vec<f64>>,
    /// Standard deviation of the Gaussian errors.
    pub noise_sd: f64,
    pub outlier_fraction: f64,
    pub outlier_shift: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            n: 50,
            factors: Vec::new(),
            continuous_count: 1,
            true_beta: None,
            noise_sd: 1.0,
            outlier_fraction: 0.0,
            outlier_shift: 10.0,
            seed: 0,
        }
    }
}

impl GenSpec {
    /// Main-effects model over the generated columns, with intercept.
    pub fn model_spec(&self) -> ModelSpec {
        let mut terms = Vec::new();
        for k in 0..self.factors.len() {
            terms.push(Term(vec![format!("f{}", k + 1)]));
        }
        for k in 0..self.continuous_count {
            terms.push(Term(vec![format!("x{}", k + 1)]));
        }
        ModelSpec {
            response: "y".into(),
            terms,
            intercept: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        for (k, f) in self.factors.iter().enumerate() {
            let total: usize = f.frequencies.iter().sum();
            if f.frequencies.len() < 2 || f.frequencies.contains(&0) || total != self.n {
                return Err(Error::InfeasibleFrequencies(format!(
                    "factor {} frequencies {:?} must be ≥ 2 positive counts summing to n = {}",
                    k + 1,
                    f.frequencies,
                    self.n
                )));
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidArgument("noise_sd must be nonnegative".into()));
        }
        if !(0.0..0.5).contains(&self.outlier_fraction) {
            return Err(Error::InvalidArgument(
                "outlier_fraction must lie in [0, 0.5)".into(),
            ));
        }
        if !self.outlier_shift.is_finite() {
            return Err(Error::NonFinite("outlier_shift"));
        }
        Ok(())
    }

    /// Parses `key = value` lines (`#` starts a comment). Factors are given
    /// as `factors = 3,3,3; 1,49`, one frequency list per factor.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut spec = GenSpec::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Parse(format!("line {}: bad {what} `{value}`", lineno + 1));
            match key {
                "n" => spec.n = value.parse().map_err(|_| bad("n"))?,
                "factors" => spec.factors = parse_factors(value).map_err(|_| bad("factors"))?,
                "continuous" => spec.continuous_count = value.parse().map_err(|_| bad("continuous"))?,
                "beta" => spec.true_beta = Some(parse_list(value).map_err(|_| bad("beta"))?),
                "noise_sd" => spec.noise_sd = value.parse().map_err(|_| bad("noise_sd"))?,
                "outlier_fraction" => {
                    spec.outlier_fraction = value.parse().map_err(|_| bad("outlier_fraction"))?
                }
                "outlier_shift" => spec.outlier_shift = value.parse().map_err(|_| bad("outlier_shift"))?,
                "seed" => spec.seed = value.parse().map_err(|_| bad("seed"))?,
                other => {
                    return Err(Error::Parse(format!("line {}: unknown key `{other}`", lineno + 1)))
                }
            }
        }
        Ok(spec)
    }
}

/// `3,3,3; 1,49` → two factors.
pub fn parse_factors(text: &str) -> Result<Vec<FactorSpec>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let frequencies = s
                .split(',')
                .map(|v| v.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad frequency `{v}`"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(FactorSpec { frequencies })
        })
        .collect()
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{v}`")))
        })
        .collect()
}

/// Generates `y = X·β + ε` with optional shifted outliers.
///
/// The first factor is laid out in blocks of equal level (level 1 first);
/// later factors are randomly permuted. Continuous predictors are standard
/// normal. `floor(outlier_fraction · n)` randomly chosen responses are
/// shifted by `outlier_shift`. The output is a pure function of the spec.
pub fn generate(spec: &GenSpec) -> Result<DataFrame> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut columns = Vec::new();

    for (k, f) in spec.factors.iter().enumerate() {
        let mut labels: Vec<String> = f
            .frequencies
            .iter()
            .enumerate()
            .flat_map(|(level, &count)| std::iter::repeat_n(format!("L{}", level + 1), count))
            .collect();
        if k > 0 {
            labels.shuffle(&mut rng);
        }
        columns.push(Column {
            name: format!("f{}", k + 1),
            data: ColumnData::factor_from_labels(&labels)?,
        });
    }
    for k in 0..spec.continuous_count {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        columns.push(Column {
            name: format!("x{}", k + 1),
            data: ColumnData::Continuous(v),
        });
    }
    // placeholder response so the design can be built from the frame itself
    columns.insert(
        0,
        Column {
            name: "y".into(),
            data: ColumnData::Continuous(vec![0.0; n]),
        },
    );
    let mut df = DataFrame::new(columns)?;
    let design = build_design(&df, &spec.model_spec())?;
    let p = design.x.ncols();
    let beta = match &spec.true_beta {
        Some(b) if b.len() != p => {
            return Err(Error::Dimension(format!(
                "true_beta has {} entries but the design has {p} columns",
                b.len()
            )))
        }
        Some(b) => b.clone(),
        None => (1..=p).map(|j| j as f64).collect(),
    };
    let mut y = design.x.mul_vec(&beta);
    if spec.noise_sd > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for v in y.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    let outliers = (spec.outlier_fraction * n as f64).floor() as usize;
    for i in rand::seq::index::sample(&mut rng, n, outliers) {
        y[i] += spec.outlier_shift;
    }
    df.columns[0].data = ColumnData::Continuous(y);
    Ok(df)
}
