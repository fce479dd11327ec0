//! S-estimator driver: generate starting candidates, refine each one by
//! iterative reweighting and keep the candidate with the smallest scale.
//!
//! Candidate `i` draws its observations from `RngStream { seed, stream_id: i }`
//! and the winner is the lexicographic minimum of `(sigma, i)`, so the result
//! does not depend on the number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::irls::{self, refine, Candidate, IrlsConfig};
use crate::linalg::{default_sing_tol, equilibrate, plu_decompose, Matrix};
use crate::rho::Bisquare;
use crate::scale::mscale;
use crate::subsample::{
    binomial, for_each_subset, nonsingular_subsample, rejection_subsample, RngStream,
    SubsampleStatus,
};

pub const DEFAULT_NSAMP: usize = 1000;
/// Largest `C(n, p)` accepted by [`fit_exhaustive`].
pub const EXHAUSTIVE_LIMIT: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Nonsingular,
    Rejection,
    Exhaustive,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Nonsingular => "nonsingular",
            Method::Rejection => "rejection",
            Method::Exhaustive => "exhaustive",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonsingular" => Ok(Method::Nonsingular),
            "rejection" => Ok(Method::Rejection),
            "exhaustive" => Ok(Method::Exhaustive),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Nonsingular method: successful candidates. Rejection method: draws
    /// attempted, singular ones included.
    pub nsamp: usize,
    /// `None` selects `(1 − p/n) / 2`, clamped to `[0.05, 0.5]`.
    pub kappa: Option<f64>,
    pub family: Bisquare,
    pub method: Method,
    pub seed: u64,
    pub refine_max_iter: usize,
    pub refine_tol: f64,
    /// `None` selects `p · u` on the equilibrated design.
    pub sing_tol: Option<f64>,
    /// Worker threads for candidate evaluation; 0 uses the global pool.
    pub threads: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            nsamp: DEFAULT_NSAMP,
            kappa: None,
            family: Bisquare::default(),
            method: Method::Nonsingular,
            seed: 0,
            refine_max_iter: irls::DEFAULT_MAX_ITER,
            refine_tol: irls::DEFAULT_COEF_TOL,
            sing_tol: None,
            threads: 0,
        }
    }
}

/// `(1 − p/n) / 2` clamped to `[0.05, 0.5]`.
pub fn auto_kappa(n: usize, p: usize) -> f64 {
    ((1.0 - p as f64 / n as f64) / 2.0).clamp(0.05, 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SFit {
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub weights: Vec<f64>,
    pub kappa: f64,
    pub sing_tol: f64,
    pub converged: bool,
    pub candidates_evaluated: usize,
    /// Singular draws thrown away (rejection method only).
    pub candidates_singular_discarded: usize,
    /// Candidates whose refinement failed (weighted system singular).
    pub candidates_failed: usize,
    pub observations_examined_total: usize,
    pub columns_skipped_total: usize,
    pub best_candidate_index: usize,
    /// Scale reached by every refined candidate, by candidate index.
    pub candidate_sigmas: Vec<f64>,
}

struct Prepared {
    xs: Matrix,
    kappa: f64,
    sing_tol: f64,
    irls: IrlsConfig,
    equil: crate::linalg::Equilibration,
}

fn prepare(x: &Matrix, y: &[f64], cfg: &FitConfig) -> Result<Prepared> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "X has {n} rows but y has {} entries",
            y.len()
        )));
    }
    if n <= p {
        return Err(Error::Dimension(format!("need n > p, got n = {n}, p = {p}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response"));
    }
    if cfg.nsamp == 0 {
        return Err(Error::InvalidArgument("nsamp must be at least 1".into()));
    }
    let (xs, equil) = equilibrate(x)?;
    let kappa = cfg.kappa.unwrap_or_else(|| auto_kappa(n, p));
    let sing_tol = cfg.sing_tol.unwrap_or_else(|| default_sing_tol(p, xs.max_abs()));
    if !(sing_tol >= 0.0 && sing_tol.is_finite()) {
        return Err(Error::InvalidArgument("sing_tol must be nonnegative".into()));
    }
    let irls = IrlsConfig {
        max_iter: cfg.refine_max_iter,
        coef_tol: cfg.refine_tol,
        family: cfg.family,
        kappa,
    };
    irls.validate()?;
    Ok(Prepared {
        xs,
        kappa,
        sing_tol,
        irls,
        equil,
    })
}

enum Outcome {
    Refined(Candidate),
    Singular,
    RefineFailed,
}

struct Evaluated {
    outcome: Outcome,
    examined: usize,
    skipped: usize,
}

fn run_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(job))
}

fn refine_outcome(prep: &Prepared, y: &[f64], beta0: &[f64]) -> Result<Outcome> {
    match refine(&prep.xs, y, beta0, &prep.irls) {
        Ok(c) => Ok(Outcome::Refined(c)),
        Err(Error::SingularWeightedSystem) => Ok(Outcome::RefineFailed),
        Err(e) => Err(e),
    }
}

/// Tolerance used to polish the winning candidate.
const POLISH_TOL: f64 = 1e-13;
const POLISH_MAX_ITER: usize = 2000;

/// Continues the winning candidate's refinement with a tight tolerance, so
/// that near-tied candidates sitting in the same basin report the same
/// coefficients to near machine precision. The polished fit is kept only if
/// its scale does not exceed the candidate's beyond rounding.
fn polish(prep: &Prepared, y: &[f64], cand: &Candidate) -> Result<Candidate> {
    if cand.sigma == 0.0 || prep.irls.coef_tol <= POLISH_TOL {
        return Ok(cand.clone());
    }
    let cfg = IrlsConfig {
        max_iter: POLISH_MAX_ITER,
        coef_tol: POLISH_TOL,
        ..prep.irls
    };
    match refine(&prep.xs, y, &cand.beta, &cfg) {
        // the scale of a converged fit jitters in its last bits
        Ok(c) if c.sigma <= cand.sigma * (1.0 + 1e-12) => Ok(Candidate {
            converged: cand.converged || c.converged,
            ..c
        }),
        Ok(_) | Err(Error::SingularWeightedSystem) => Ok(cand.clone()),
        Err(e) => Err(e),
    }
}

fn finish(x: &Matrix, y: &[f64], prep: &Prepared, evaluated: Vec<Evaluated>) -> Result<SFit> {
    let mut best: Option<(usize, &Candidate)> = None;
    let mut candidate_sigmas = Vec::new();
    let (mut refined, mut singular, mut failed, mut examined, mut skipped) = (0, 0, 0, 0, 0);
    for (i, ev) in evaluated.iter().enumerate() {
        examined += ev.examined;
        skipped += ev.skipped;
        match &ev.outcome {
            Outcome::Refined(c) => {
                refined += 1;
                candidate_sigmas.push(c.sigma);
                // strict comparison keeps the lowest index on ties
                if best.is_none_or(|(_, b)| c.sigma < b.sigma) {
                    best = Some((i, c));
                }
            }
            Outcome::Singular => singular += 1,
            Outcome::RefineFailed => failed += 1,
        }
    }
    let (best_index, cand) = best.ok_or(Error::NoCandidates)?;
    let cand = polish(prep, y, cand)?;
    let beta = prep.equil.unscale_coefficients(&cand.beta);
    let r = irls::residuals(x, y, &beta);
    let sigma = cand.sigma;
    let weights = r
        .iter()
        .map(|ri| {
            if sigma > 0.0 {
                prep.irls.family.weight(ri / sigma)
            } else if *ri == 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(SFit {
        beta,
        sigma,
        weights,
        kappa: prep.kappa,
        sing_tol: prep.sing_tol,
        converged: cand.converged,
        candidates_evaluated: refined,
        candidates_singular_discarded: singular,
        candidates_failed: failed,
        observations_examined_total: examined,
        columns_skipped_total: skipped,
        best_candidate_index: best_index,
        candidate_sigmas,
    })
}

/// Computes the S-estimate of regression for `y` on `x`.
///
/// `x` is equilibrated once; candidates are generated on the equilibrated
/// design and the winning coefficients are mapped back to the original
/// columns. [`Method::Exhaustive`] delegates to [`fit_exhaustive`].
pub fn fit(x: &Matrix, y: &[f64], cfg: &FitConfig) -> Result<SFit> {
    if cfg.method == Method::Exhaustive {
        return fit_exhaustive(x, y, cfg);
    }
    let prep = prepare(x, y, cfg)?;
    let method = cfg.method;
    let evaluate = |i: usize| -> Result<Evaluated> {
        let stream = RngStream::new(cfg.seed, i as u64);
        match method {
            Method::Nonsingular => {
                let s = nonsingular_subsample(&prep.xs, y, stream, prep.sing_tol)?;
                if let SubsampleStatus::Exhausted { step } = s.status {
                    return Err(Error::RankDeficient { step });
                }
                Ok(Evaluated {
                    outcome: refine_outcome(&prep, y, &s.beta0)?,
                    examined: s.observations_examined,
                    skipped: s.columns_skipped,
                })
            }
            Method::Rejection => match rejection_subsample(&prep.xs, y, stream, prep.sing_tol, 1) {
                Ok(s) => Ok(Evaluated {
                    outcome: refine_outcome(&prep, y, &s.beta0)?,
                    examined: s.observations_examined,
                    skipped: 0,
                }),
                Err(Error::ExhaustedTries { .. }) => Ok(Evaluated {
                    outcome: Outcome::Singular,
                    examined: prep.xs.ncols(),
                    skipped: 0,
                }),
                Err(e) => Err(e),
            },
            Method::Exhaustive => unreachable!(),
        }
    };
    let evaluated: Vec<Evaluated> = run_pool(cfg.threads, || {
        (0..cfg.nsamp)
            .into_par_iter()
            .map(evaluate)
            .collect::<Result<Vec<_>>>()
    })??;
    finish(x, y, &prep, evaluated)
}

/// Refines every nonsingular size-`p` subset. The smallest scale it finds is
/// a lower bound for any sampled fit of the same data and configuration.
pub fn fit_exhaustive(x: &Matrix, y: &[f64], cfg: &FitConfig) -> Result<SFit> {
    let prep = prepare(x, y, cfg)?;
    let (n, p) = (x.nrows(), x.ncols());
    let count = binomial(n, p);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut starts = Vec::with_capacity(count as usize);
    let mut singular = 0;
    for_each_subset(n, p, |rows| {
        match plu_decompose(&prep.xs.select_rows(rows), Some(prep.sing_tol)) {
            Ok(f) => {
                let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
                starts.push(f.solve(&ys));
            }
            Err(_) => singular += 1,
        }
    });
    if starts.is_empty() {
        return Err(Error::RankDeficient { step: p });
    }
    let evaluated: Vec<Evaluated> = run_pool(cfg.threads, || {
        starts
            .par_iter()
            .map(|beta0| {
                Ok(Evaluated {
                    outcome: refine_outcome(&prep, y, beta0)?,
                    examined: p,
                    skipped: 0,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut fit = finish(x, y, &prep, evaluated)?;
    fit.candidates_singular_discarded = singular;
    Ok(fit)
}

/// M-scale of the residuals of `beta`, for checking a fit's consistency.
pub fn residual_scale(x: &Matrix, y: &[f64], beta: &[f64], kappa: f64, family: &Bisquare) -> Result<f64> {
    mscale(&irls::residuals(x, y, beta), kappa, family)
}
