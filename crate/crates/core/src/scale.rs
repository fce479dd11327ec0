//! M-estimate of scale: the `σ` solving `mean(rho(r / σ)) = κ`.

use crate::error::{Error, Result};
use crate::rho::Bisquare;

#[derive(Debug, Clone, Copy)]
pub struct ScaleProblem<'a> {
    pub residuals: &'a [f64],
    pub kappa: f64,
    pub family: Bisquare,
}

impl ScaleProblem<'_> {
    pub fn solve(&self) -> Result<f64> {
        mscale(self.residuals, self.kappa, &self.family)
    }
}

pub(crate) fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "kappa must lie strictly between 0 and 1, got {kappa}"
        )))
    }
}

/// `mean(rho(r / σ))`; nonincreasing in `σ`.
pub fn mean_rho(residuals: &[f64], sigma: f64, family: &Bisquare) -> f64 {
    let inv = 1.0 / sigma;
    residuals.iter().map(|r| family.rho(r * inv)).sum::<f64>() / residuals.len() as f64
}

fn validate(residuals: &[f64], kappa: f64) -> Result<()> {
    check_kappa(kappa)?;
    if residuals.is_empty() {
        return Err(Error::Dimension("scale needs at least one residual".into()));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("residuals"));
    }
    Ok(())
}

/// True when the nonzero residuals are too few for a positive root
/// (zero fraction ≥ 1 − κ). The scale is then 0 by convention.
fn is_degenerate(residuals: &[f64], kappa: f64) -> bool {
    let nonzero = residuals.iter().filter(|r| **r != 0.0).count();
    (nonzero as f64) / (residuals.len() as f64) <= kappa
}

/// Solves the scale equation by bisection.
///
/// The bracket starts at `max|r|` and is widened geometrically until the
/// mean-rho values straddle `κ`; bisection then runs until the midpoint is no
/// longer representable between the endpoints.
pub fn mscale(residuals: &[f64], kappa: f64, family: &Bisquare) -> Result<f64> {
    validate(residuals, kappa)?;
    if is_degenerate(residuals, kappa) {
        return Ok(0.0);
    }
    let rmax = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let g = |s: f64| mean_rho(residuals, s, family);

    // g(hi) <= kappa < g(lo)
    let mut hi = rmax;
    while g(hi) > kappa {
        hi *= 2.0;
    }
    let mut lo = hi * 0.5;
    while g(lo) <= kappa {
        hi = lo;
        lo *= 0.5;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (glo, ghi) = (g(lo), g(hi));
    Ok(if (glo - kappa).abs() < (ghi - kappa).abs() {
        lo
    } else {
        hi
    })
}

/// Solves the scale equation with the reweighting update
/// `σ ← σ · sqrt(mean(rho(r/σ)) / κ)`, iterated to a fixed point.
///
/// Converges linearly from any positive start; kept as an independent route
/// to the same root as [`mscale`].
pub fn mscale_reweighted(
    residuals: &[f64],
    kappa: f64,
    family: &Bisquare,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    validate(residuals, kappa)?;
    if is_degenerate(residuals, kappa) {
        return Ok(0.0);
    }
    let mut sigma = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    for _ in 0..max_iter {
        let next = sigma * (mean_rho(residuals, sigma, family) / kappa).sqrt();
        let done = (next - sigma).abs() <= rel_tol * sigma;
        sigma = next;
        if done {
            break;
        }
    }
    Ok(sigma)
}
