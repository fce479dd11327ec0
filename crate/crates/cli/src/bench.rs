//! Side-by-side comparison of nonsingular and rejection subsampling.
//!
//! Both methods draw candidate `i` from stream `i` of the same seed, on the
//! same equilibrated design, until each has produced the requested number of
//! nonsingular candidates. Candidate generation is timed on a single thread;
//! the optional refinement phase reports the best scale each method reaches.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use srobust::linalg::default_sing_tol;
use srobust::model::{build_design, generate, Design, FactorSpec, GenSpec, ModelSpec, Term};
use srobust::model::{Column, ColumnData, DataFrame};
use srobust::sfit::auto_kappa;
use srobust::{
    equilibrate, nonsingular_subsample, refine, rejection_subsample, Error, IrlsConfig, Matrix,
    Result, RngStream, SubsampleStatus,
};

/// Default per-candidate draw budget for the rejection method.
pub const DEFAULT_MAX_TRIES: u64 = 1_000_000;

pub const SCENARIOS: [&str; 3] = ["continuous", "anova", "rare-level"];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub candidates: usize,
    pub max_tries: u64,
    pub seed: u64,
    pub repeat: usize,
    pub refine: bool,
    pub sing_tol: Option<f64>,
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            candidates: 500,
            max_tries: DEFAULT_MAX_TRIES,
            seed: 0,
            repeat: 1,
            refine: true,
            sing_tol: None,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: &'static str,
    pub candidates_requested: usize,
    pub candidates_obtained: usize,
    /// Singular draws thrown away (always 0 for the nonsingular method).
    pub singular_discards: u64,
    /// Subsamples drawn; the nonsingular method draws exactly one per candidate.
    pub draws: u64,
    /// Observations fed to the factorization, summed over candidates.
    pub observations_examined: u64,
    /// Collinear observations skipped (nonsingular method only).
    pub columns_skipped: u64,
    /// Smallest M-scale over the refined candidates; `None` when refinement
    /// was skipped or no candidate could be refined.
    pub final_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodTiming {
    pub method: &'static str,
    /// Median over the repetitions.
    pub subsample_seconds: f64,
    pub subsample_seconds_runs: Vec<f64>,
    pub refine_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub repeat: usize,
    pub methods: Vec<MethodTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub scenario: String,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub sing_tol: f64,
    pub max_tries: u64,
    pub methods: Vec<MethodReport>,
    pub timing: Timing,
}

impl BenchReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }

    pub fn timing_of(&self, name: &str) -> Option<&MethodTiming> {
        self.timing.methods.iter().find(|m| m.method == name)
    }
}

/// One-way layout with 3 groups of 3 replicates and group means 1, 3, 5,
/// so treatment-contrast coefficients are (1, 2, 4) with zero residuals.
pub fn anova_design() -> Design {
    let labels = ["A", "A", "A", "B", "B", "B", "C", "C", "C"];
    let df = DataFrame::new(vec![
        Column {
            name: "y".into(),
            data: ColumnData::Continuous(vec![1.0, 1.0, 1.0, 3.0, 3.0, 3.0, 5.0, 5.0, 5.0]),
        },
        Column {
            name: "g".into(),
            data: ColumnData::factor_from_labels(&labels).expect("valid labels"),
        },
    ])
    .expect("consistent frame");
    let spec = ModelSpec::new("y", vec![Term(vec!["g".into()])], true).expect("valid spec");
    build_design(&df, &spec).expect("valid design")
}

/// Builds a named scenario's data set.
pub fn scenario(name: &str, seed: u64) -> Result<Design> {
    let spec = match name {
        "anova" => return Ok(anova_design()),
        "continuous" => GenSpec {
            n: 1000,
            continuous_count: 9,
            outlier_fraction: 0.1,
            seed,
            ..GenSpec::default()
        },
        "rare-level" => GenSpec {
            n: 50,
            factors: vec![FactorSpec {
                frequencies: vec![1, 6, 6, 6, 6, 5, 5, 5, 5, 5],
            }],
            continuous_count: 0,
            outlier_fraction: 0.1,
            seed,
            ..GenSpec::default()
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown scenario `{other}` (expected one of {})",
                SCENARIOS.join(", ")
            )))
        }
    };
    build_design(&generate(&spec)?, &spec.model_spec())
}

struct Sampled {
    report: MethodReport,
    starts: Vec<Vec<f64>>,
}

fn sample_nonsingular(xs: &Matrix, y: &[f64], cfg: &BenchConfig, tol: f64) -> Result<Sampled> {
    let mut report = MethodReport {
        method: "nonsingular",
        candidates_requested: cfg.candidates,
        candidates_obtained: 0,
        singular_discards: 0,
        draws: 0,
        observations_examined: 0,
        columns_skipped: 0,
        final_sigma: None,
    };
    let mut starts = Vec::with_capacity(cfg.candidates);
    for i in 0..cfg.candidates {
        let s = nonsingular_subsample(xs, y, RngStream::new(cfg.seed, i as u64), tol)?;
        if let SubsampleStatus::Exhausted { step } = s.status {
            return Err(Error::RankDeficient { step });
        }
        report.draws += 1;
        report.candidates_obtained += 1;
        report.observations_examined += s.observations_examined as u64;
        report.columns_skipped += s.columns_skipped as u64;
        starts.push(s.beta0);
    }
    Ok(Sampled { report, starts })
}

fn sample_rejection(xs: &Matrix, y: &[f64], cfg: &BenchConfig, tol: f64) -> Result<Sampled> {
    let p = xs.ncols() as u64;
    let mut report = MethodReport {
        method: "rejection",
        candidates_requested: cfg.candidates,
        candidates_obtained: 0,
        singular_discards: 0,
        draws: 0,
        observations_examined: 0,
        columns_skipped: 0,
        final_sigma: None,
    };
    let mut starts = Vec::with_capacity(cfg.candidates);
    for i in 0..cfg.candidates {
        match rejection_subsample(xs, y, RngStream::new(cfg.seed, i as u64), tol, cfg.max_tries) {
            Ok(s) => {
                report.candidates_obtained += 1;
                report.draws += s.tries;
                report.singular_discards += s.tries - 1;
                report.observations_examined += s.observations_examined as u64;
                starts.push(s.beta0);
            }
            Err(Error::ExhaustedTries { tries }) => {
                report.draws += tries;
                report.singular_discards += tries;
                report.observations_examined += tries * p;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Sampled { report, starts })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn best_scale(xs: &Matrix, y: &[f64], starts: &[Vec<f64>], irls: &IrlsConfig, threads: usize) -> Result<Option<f64>> {
    let job = || {
        starts
            .par_iter()
            .map(|b| match refine(xs, y, b, irls) {
                Ok(c) => Ok(Some(c.sigma)),
                Err(Error::SingularWeightedSystem) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()
    };
    let sigmas = if threads == 0 {
        job()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?
            .install(job)?
    };
    Ok(sigmas.into_iter().flatten().reduce(f64::min))
}

/// Runs both subsampling methods on `design` and reports their counters and
/// timings.
pub fn run_bench(name: &str, design: &Design, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.candidates == 0 || cfg.repeat == 0 || cfg.max_tries == 0 {
        return Err(Error::InvalidArgument(
            "candidates, repeat and max_tries must be positive".into(),
        ));
    }
    let (xs, _) = equilibrate(&design.x)?;
    let (n, p) = (xs.nrows(), xs.ncols());
    if n <= p {
        return Err(Error::Dimension(format!("need n > p, got n = {n}, p = {p}")));
    }
    let tol = cfg.sing_tol.unwrap_or_else(|| default_sing_tol(p, xs.max_abs()));
    let y = &design.y;

    type Sampler = fn(&Matrix, &[f64], &BenchConfig, f64) -> Result<Sampled>;
    let samplers: [Sampler; 2] = [sample_nonsingular, sample_rejection];
    let mut methods = Vec::new();
    let mut timings = Vec::new();
    for sampler in samplers {
        let mut runs = Vec::with_capacity(cfg.repeat);
        let mut sampled = None;
        for _ in 0..cfg.repeat {
            let t0 = Instant::now();
            let s = sampler(&xs, y, cfg, tol)?;
            runs.push(t0.elapsed().as_secs_f64());
            sampled = Some(s);
        }
        let Sampled { mut report, starts } = sampled.expect("repeat >= 1");
        let mut refine_seconds = None;
        if cfg.refine {
            let irls = IrlsConfig::new(auto_kappa(n, p));
            let t0 = Instant::now();
            report.final_sigma = best_scale(&xs, y, &starts, &irls, cfg.threads)?;
            refine_seconds = Some(t0.elapsed().as_secs_f64());
        }
        timings.push(MethodTiming {
            method: report.method,
            subsample_seconds: median(&runs),
            subsample_seconds_runs: runs,
            refine_seconds,
        });
        methods.push(report);
    }
    Ok(BenchReport {
        scenario: name.to_string(),
        n,
        p,
        seed: cfg.seed,
        sing_tol: tol,
        max_tries: cfg.max_tries,
        methods,
        timing: Timing {
            repeat: cfg.repeat,
            methods: timings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anova_counters() {
        let cfg = BenchConfig {
            candidates: 200,
            ..BenchConfig::default()
        };
        let r = run_bench("anova", &anova_design(), &cfg).unwrap();
        let ns = r.method("nonsingular").unwrap();
        let rj = r.method("rejection").unwrap();
        assert_eq!(ns.candidates_obtained, 200);
        assert_eq!(ns.draws, 200);
        assert_eq!(ns.singular_discards, 0);
        assert_eq!(ns.observations_examined, 600 + ns.columns_skipped);
        assert_eq!(rj.candidates_obtained, 200);
        assert_eq!(rj.draws, 200 + rj.singular_discards);
        assert_eq!(rj.observations_examined, 3 * rj.draws);
        assert_eq!(ns.final_sigma, Some(0.0));
        assert_eq!(rj.final_sigma, Some(0.0));
    }

    #[test]
    fn exhausted_rejection_is_counted() {
        let cfg = BenchConfig {
            candidates: 20,
            max_tries: 1,
            refine: false,
            ..BenchConfig::default()
        };
        let r = run_bench("rare-level", &scenario("rare-level", 1).unwrap(), &cfg).unwrap();
        let rj = r.method("rejection").unwrap();
        assert!(rj.candidates_obtained < 20);
        assert_eq!(rj.draws, 20);
        assert_eq!(rj.observations_examined, 200);
        assert_eq!(rj.final_sigma, None);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn unknown_scenario() {
        assert!(matches!(scenario("nope", 0), Err(Error::InvalidArgument(_))));
    }
}
