use std::fs::File;
use std::io::{self, BufReader, Write};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use srobust::linalg::default_sing_tol;
use srobust::model::{
    build_design, generate, parse_factors, parse_list, DataFrame, Design, GenSpec, ModelSpec,
};
use srobust::{enumerate_subsamples, equilibrate, fit, Bisquare, FitConfig, Method};

use crate::bench::{self, BenchConfig};
use crate::{BenchArgs, Cli, Command, EnumerateArgs, FitArgs, ModelArgs, SimulateArgs};

/// What a command produced for stdout.
#[derive(Debug)]
pub enum Output {
    Json(Value),
    /// Already written (CSV to a file or stdout).
    Done,
}

struct Log {
    quiet: bool,
}

impl Log {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("srobust: {}", msg.as_ref());
        }
    }
}

pub fn run(cli: Cli) -> Result<Output> {
    let log = Log { quiet: cli.quiet };
    match cli.command {
        Command::Fit(args) => cmd_fit(&args, &log).map(Output::Json),
        Command::Enumerate(args) => cmd_enumerate(&args, &log).map(Output::Json),
        Command::Bench(args) => cmd_bench(&args, &log).map(Output::Json),
        Command::Simulate(args) => cmd_simulate(&args, &log).map(|()| Output::Done),
    }
}

fn load_design(data: &std::path::Path, formula: &str, factors: &[String]) -> Result<Design> {
    let file = File::open(data).with_context(|| format!("cannot open {}", data.display()))?;
    let df = DataFrame::from_csv(BufReader::new(file), factors)
        .with_context(|| format!("cannot read {}", data.display()))?;
    let spec = ModelSpec::parse(formula)?;
    Ok(build_design(&df, &spec)?)
}

fn load_model(m: &ModelArgs, log: &Log) -> Result<Design> {
    let d = load_design(&m.data, &m.formula, &m.factors)?;
    log.note(format!(
        "{}: {} observations, {} design columns",
        m.data.display(),
        d.x.nrows(),
        d.x.ncols()
    ));
    Ok(d)
}

#[derive(Serialize)]
struct Diagnostics {
    converged: bool,
    candidates_evaluated: usize,
    candidates_singular_discarded: usize,
    candidates_failed: usize,
    observations_examined_total: usize,
    columns_skipped_total: usize,
    best_candidate_index: usize,
}

#[derive(Serialize)]
struct ConfigEcho {
    formula: String,
    method: &'static str,
    nsamp: usize,
    cc: f64,
    kappa: f64,
    refine_tol: f64,
    refine_maxit: usize,
    sing_tol: f64,
}

fn cmd_fit(args: &FitArgs, log: &Log) -> Result<Value> {
    let method: Method = args.method.parse()?;
    let design = load_model(&args.model, log)?;
    let cfg = FitConfig {
        nsamp: args.nsamp,
        kappa: args.kappa,
        family: Bisquare::new(args.cc)?,
        method,
        seed: args.seed,
        refine_max_iter: args.refine_maxit,
        refine_tol: args.refine_tol,
        sing_tol: args.sing_tol.sing_tol,
        threads: args.threads,
    };
    let t0 = Instant::now();
    let f = fit(&design.x, &design.y, &cfg)?;
    let seconds = t0.elapsed().as_secs_f64();
    log.note(format!(
        "{} candidates refined, sigma = {:.6}",
        f.candidates_evaluated, f.sigma
    ));
    if !f.converged {
        log.note("warning: the best candidate did not converge; consider raising --refine-maxit");
    }

    let coefficients: Map<String, Value> = design
        .column_names
        .iter()
        .zip(&f.beta)
        .map(|(name, b)| (name.clone(), json!(b)))
        .collect();
    let config = ConfigEcho {
        formula: ModelSpec::parse(&args.model.formula)?.to_string(),
        method: method.as_str(),
        nsamp: args.nsamp,
        cc: args.cc,
        kappa: f.kappa,
        refine_tol: args.refine_tol,
        refine_maxit: args.refine_maxit,
        sing_tol: f.sing_tol,
    };
    let diagnostics = Diagnostics {
        converged: f.converged,
        candidates_evaluated: f.candidates_evaluated,
        candidates_singular_discarded: f.candidates_singular_discarded,
        candidates_failed: f.candidates_failed,
        observations_examined_total: f.observations_examined_total,
        columns_skipped_total: f.columns_skipped_total,
        best_candidate_index: f.best_candidate_index,
    };
    Ok(json!({
        "seed": args.seed,
        "n": design.x.nrows(),
        "p": design.x.ncols(),
        "coefficients": coefficients,
        "beta": f.beta,
        "sigma": f.sigma,
        "weights": f.weights,
        "diagnostics": diagnostics,
        "config": config,
        "timing": { "seconds": seconds, "threads": args.threads },
    }))
}

fn cmd_enumerate(args: &EnumerateArgs, log: &Log) -> Result<Value> {
    let design = load_model(&args.model, log)?;
    let (xs, _) = equilibrate(&design.x)?;
    let tol = args
        .sing_tol
        .sing_tol
        .unwrap_or_else(|| default_sing_tol(xs.ncols(), xs.max_abs()));
    let t0 = Instant::now();
    let c = enumerate_subsamples(&xs, tol)?;
    let seconds = t0.elapsed().as_secs_f64();
    Ok(json!({
        "n": xs.nrows(),
        "p": xs.ncols(),
        "total": c.total,
        "nonsingular": c.nonsingular,
        "ratio": c.ratio(),
        "sing_tol": tol,
        "timing": { "seconds": seconds },
    }))
}

fn cmd_bench(args: &BenchArgs, log: &Log) -> Result<Value> {
    let (name, design) = match (&args.data, &args.formula) {
        (Some(data), Some(formula)) => (
            data.display().to_string(),
            load_design(data, formula, &args.factors)?,
        ),
        _ => (args.scenario.clone(), bench::scenario(&args.scenario, args.seed)?),
    };
    let cfg = BenchConfig {
        candidates: args.candidates,
        max_tries: args.max_tries,
        seed: args.seed,
        repeat: args.repeat,
        refine: !args.skip_refine,
        sing_tol: args.sing_tol.sing_tol,
        threads: args.threads,
    };
    log.note(format!(
        "bench `{name}`: n = {}, p = {}, {} candidates per method",
        design.x.nrows(),
        design.x.ncols(),
        args.candidates
    ));
    let report = bench::run_bench(&name, &design, &cfg)?;
    Ok(serde_json::to_value(report)?)
}

fn cmd_simulate(args: &SimulateArgs, log: &Log) -> Result<()> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            GenSpec::from_config(&text)?
        }
        None => GenSpec::default(),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(f) = &args.factors {
        spec.factors = parse_factors(f)?;
    }
    if let Some(c) = args.continuous {
        spec.continuous_count = c;
    }
    if let Some(b) = &args.beta {
        spec.true_beta = Some(parse_list(b)?);
    }
    if let Some(v) = args.noise_sd {
        spec.noise_sd = v;
    }
    if let Some(v) = args.outlier_fraction {
        spec.outlier_fraction = v;
    }
    if let Some(v) = args.outlier_shift {
        spec.outlier_shift = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    let df = generate(&spec)?;
    match &args.out {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            df.write_csv(io::BufWriter::new(file))?;
            log.note(format!("wrote {} rows to {}", df.nrows(), path.display()));
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            df.write_csv(&mut lock)?;
            lock.flush()?;
        }
    }
    log.note(format!("model: {}", spec.model_spec()));
    Ok(())
}
