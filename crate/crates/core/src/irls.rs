//! Simultaneous M-estimation of regression and scale by iterative
//! reweighting, used to refine each subsample's starting coefficients.
//!
//! Each pass sets `σ` to the M-scale of the current residuals, computes
//! bisquare weights `w(rᵢ/σ)` and solves the weighted least-squares problem
//! through the normal equations `XᵀWX β = XᵀWy`. With `σ` equal to the exact
//! M-scale of the current fit, every pass is a majorization step of the
//! scale objective, so the sequence of scales never increases.

use crate::error::{Error, Result};
use crate::linalg::{plu_decompose, Matrix};
use crate::rho::Bisquare;
use crate::scale::{check_kappa, mscale};

pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_COEF_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsConfig {
    pub max_iter: usize,
    /// Stop once the largest change in fitted values is at most
    /// `coef_tol · σ`.
    pub coef_tol: f64,
    pub family: Bisquare,
    pub kappa: f64,
}

impl IrlsConfig {
    pub fn new(kappa: f64) -> Self {
        IrlsConfig {
            max_iter: DEFAULT_MAX_ITER,
            coef_tol: DEFAULT_COEF_TOL,
            family: Bisquare::default(),
            kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_kappa(self.kappa)?;
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.coef_tol > 0.0 && self.coef_tol.is_finite()) {
            return Err(Error::InvalidArgument("coef_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub iterations: usize,
    pub converged: bool,
    /// M-scale of the fit at the start of every pass, followed by the scale of
    /// the returned coefficients.
    pub scale_path: Vec<f64>,
}

pub fn residuals(x: &Matrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| y[i] - x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Weighted least squares via the normal equations.
pub fn weighted_least_squares(x: &Matrix, y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let p = x.ncols();
    if w.iter().all(|v| *v == 0.0) {
        return Err(Error::SingularWeightedSystem);
    }
    let mut xtwx = Matrix::zeros(p, p);
    let mut xtwy = vec![0.0; p];
    for i in 0..x.nrows() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        let row = x.row(i);
        for a in 0..p {
            let wa = wi * row[a];
            if wa == 0.0 {
                continue;
            }
            xtwy[a] += wa * y[i];
            for b in a..p {
                xtwx[(a, b)] += wa * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[(a, b)] = xtwx[(b, a)];
        }
    }
    let f = plu_decompose(&xtwx, None).map_err(|_| Error::SingularWeightedSystem)?;
    Ok(f.solve(&xtwy))
}

/// Refines `beta0` to a local solution of the simultaneous regression and
/// scale M-estimating equations.
///
/// A scale below `1e-10 · (max|y| + 1)` counts as a perfect fit: the
/// candidate is returned with `sigma = 0`. Reaching `max_iter`, or a
/// weighted system that loses rank while some weights remain positive,
/// clears `converged` but is not an error.
pub fn refine(x: &Matrix, y: &[f64], beta0: &[f64], cfg: &IrlsConfig) -> Result<Candidate> {
    cfg.validate()?;
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n || beta0.len() != p {
        return Err(Error::Dimension(format!(
            "refine: X is {n}x{p}, y has {} entries, beta0 has {}",
            y.len(),
            beta0.len()
        )));
    }
    if beta0.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite("beta0"));
    }
    let guard = 1e-10 * (y.iter().fold(0.0_f64, |m, v| m.max(v.abs())) + 1.0);
    let family = cfg.family;

    let mut beta = beta0.to_vec();
    let mut r = residuals(x, y, &beta);
    let mut scale_path = Vec::new();
    let mut weights = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let sigma = mscale(&r, cfg.kappa, &family)?;
        scale_path.push(sigma);
        if sigma < guard {
            return Ok(Candidate {
                beta,
                sigma: 0.0,
                iterations,
                converged: true,
                scale_path,
            });
        }
        for (w, ri) in weights.iter_mut().zip(&r) {
            *w = family.weight(ri / sigma);
        }
        // Weights can vanish on every row of some factor level; the weighted
        // system then loses rank. The current fit is still a valid candidate
        // with a known scale, so it is returned unconverged.
        let next = match weighted_least_squares(x, y, &weights) {
            Ok(b) => b,
            Err(Error::SingularWeightedSystem) if weights.iter().any(|w| *w > 0.0) => break,
            Err(e) => return Err(e),
        };
        let next_r = residuals(x, y, &next);
        let change = r
            .iter()
            .zip(&next_r)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        beta = next;
        r = next_r;
        if change <= cfg.coef_tol * sigma {
            converged = true;
            break;
        }
    }

    let mut sigma = mscale(&r, cfg.kappa, &family)?;
    if sigma < guard {
        sigma = 0.0;
    }
    scale_path.push(sigma);
    Ok(Candidate {
        beta,
        sigma,
        iterations,
        converged,
        scale_path,
    })
}
