use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use earlystop::generalization::{self, Runner, SgdRunner, SvrgRunner, TestDistribution};
use earlystop::harness::experiment::Experiment;
use earlystop::harness::report::{self, fmt_f64, Format};
use earlystop::harness::{optional_stopping_selftest, Algorithm, ExperimentConfig};
use earlystop::measures::{self, EmpiricalMeasure};

#[derive(Parser)]
#[command(name = "earlystop", version, about = "Early-stopped SGD, DSGD and SVRG experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials; overrides the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Summary output path (stdout when absent). Per-trial CSV and JSONL run
    /// records are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the expected stopping time of SGD.
    Sgd(Common),
    /// Estimate the expected stopping time of decentralized SGD.
    Dsgd(Common),
    /// Estimate the expected number of SVRG epochs.
    Svrg(Common),
    /// Population gradient after early stopping, and Wasserstein concentration.
    Generalize(Common),
    /// Print every applicable bound for a configuration without running it.
    Bounds(Common),
    /// Exact p-Wasserstein distance between two weighted point clouds (CSV).
    Wasserstein {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Optional-stopping self-test of the Monte Carlo machinery.
    Selftest {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(common: &Common, algorithm: Option<Algorithm>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if let Some(a) = algorithm {
        cfg.algorithm = a;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, suffix: Option<&str>, body: &str) -> Result<()> {
    match (out, suffix) {
        (None, None) => print!("{body}"),
        (None, Some(_)) => {}
        (Some(p), None) => std::fs::write(p, body)?,
        (Some(p), Some(s)) => {
            let mut name = p.file_stem().unwrap_or_default().to_os_string();
            name.push(s);
            std::fs::write(p.with_file_name(name), body)?
        }
    }
    Ok(())
}

fn run_trials(common: &Common, algorithm: Algorithm) -> Result<bool> {
    let exp = Experiment::new(load(common, Some(algorithm))?)?;
    let results = exp.run_trials()?;
    let summary = exp.summarize(&results);
    let out = common.out.as_deref();
    emit(out, None, &report::report(std::slice::from_ref(&summary), common.format)?)?;
    emit(out, Some(".trials.csv"), &report::trials_csv(&results)?)?;
    emit(out, Some(".records.jsonl"), &report::records_jsonl(&results)?)?;
    Ok(summary.pass)
}

fn bounds(common: &Common) -> Result<bool> {
    let exp = Experiment::new(load(common, None)?)?;
    let body = match common.format {
        Format::Json => serde_json::to_string_pretty(&exp.bounds)? + "\n",
        Format::Csv => {
            let mut s = String::from("name,valid,value,margin,condition\n");
            for b in &exp.bounds {
                s += &format!("{},{},{},{},\"{}\"\n", b.name, b.valid, report::fmt_opt(b.value), fmt_f64(b.margin), b.condition);
            }
            s
        }
    };
    emit(common.out.as_deref(), None, &body)?;
    Ok(exp.bounds.iter().all(|b| b.valid))
}

#[derive(serde::Serialize)]
struct GeneralizeRow {
    kind: &'static str,
    n: usize,
    trials: usize,
    mean: f64,
    ci: f64,
    bound: f64,
    pass: bool,
}

fn generalize(common: &Common) -> Result<bool> {
    let cfg = load(common, None)?;
    let section = cfg.generalize.clone().context("missing \"generalize\" section")?;
    let mu = match (&cfg.data.mu, &cfg.data.mu_path) {
        (Some(m), _) => m.build()?,
        (None, Some(p)) => EmpiricalMeasure::from_csv_path(cfg.resolve(p))?,
        _ => bail!("generalize needs data.mu or data.mu_path"),
    };
    let dist = TestDistribution::new(mu.clone())?;
    let loss = match cfg.problem.kind {
        earlystop::problems::LossKind::Quadratic => earlystop::problems::quadratic_problem(),
        earlystop::problems::LossKind::TanhComposite => {
            let r = cfg.problem.radius.unwrap_or_else(|| mu.points().map(earlystop::vecops::norm).fold(0.0, f64::max));
            earlystop::problems::tanh_composite_problem(&mu, r)?
        }
    };
    let x1 = cfg.x1.clone().unwrap_or_else(|| vec![1.0; mu.dim()]);
    let (runner, epsilon): (Box<dyn Runner>, f64) = match cfg.algorithm {
        Algorithm::Svrg => {
            let s = cfg.svrg.as_ref().context("missing \"svrg\" section")?;
            let max_epochs = s.max_epochs.unwrap_or(earlystop::svrg::DEFAULT_MAX_EPOCHS);
            (Box::new(SvrgRunner { epsilon: s.epsilon, x1, max_epochs }), s.epsilon)
        }
        Algorithm::Sgd => {
            let s = cfg.sgd.as_ref().context("missing \"sgd\" section")?;
            let eta = s.eta.context("generalize with sgd needs an explicit eta")?;
            let mut config = earlystop::sgd::SgdConfig::new(eta, s.m, s.epsilon);
            if let Some(cap) = s.max_iters {
                config.max_iters = cap;
            }
            (Box::new(SgdRunner { config, x1 }), s.epsilon)
        }
        Algorithm::Dsgd => bail!("generalize supports sgd and svrg runners"),
    };
    let mut rows = Vec::new();
    for &n in &section.n_t {
        let est = generalization::mc_generalization_gap(&dist, &loss, runner.as_ref(), n, cfg.n_v.max(n), cfg.trials, cfg.master_seed)?;
        let bound = generalization::generalization_bound_discrete(epsilon, loss.g, dist.support_size(), n)?;
        rows.push(GeneralizeRow {
            kind: "grad_sq_population",
            n,
            trials: est.trials,
            mean: est.mean_grad_sq_g,
            ci: est.ci,
            bound,
            pass: est.cap_hits == 0 && est.mean_grad_sq_g <= bound + est.ci,
        });
    }
    for &n in &section.concentration_n {
        let est = generalization::concentration_experiment(&mu, n, section.resamples, cfg.master_seed)?;
        rows.push(GeneralizeRow {
            kind: "w2_sq_concentration",
            n,
            trials: est.resamples,
            mean: est.mean_w2_sq,
            ci: est.ci,
            bound: est.bound,
            pass: est.mean_w2_sq <= est.bound,
        });
    }
    let body = match common.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv => {
            let mut s = String::from("kind,n,trials,mean,ci,bound,pass\n");
            for r in &rows {
                s += &format!("{},{},{},{},{},{},{}\n", r.kind, r.n, r.trials, fmt_f64(r.mean), fmt_f64(r.ci), fmt_f64(r.bound), r.pass);
            }
            s
        }
    };
    emit(common.out.as_deref(), None, &body)?;
    Ok(rows.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sgd(c) => run_trials(c, Algorithm::Sgd),
        Command::Dsgd(c) => run_trials(c, Algorithm::Dsgd),
        Command::Svrg(c) => run_trials(c, Algorithm::Svrg),
        Command::Generalize(c) => generalize(c),
        Command::Bounds(c) => bounds(c),
        Command::Wasserstein { a, b, p } => (|| {
            let a = EmpiricalMeasure::from_csv_path(a)?;
            let b = EmpiricalMeasure::from_csv_path(b)?;
            println!("{}", fmt_f64(measures::wasserstein(&a, &b, *p)?));
            Ok(true)
        })(),
        Command::Selftest { trials, seed } => optional_stopping_selftest(*trials, *seed).map_err(Into::into).map(|r| {
            println!("trials,mean,ci,pass\n{},{},{},{}", r.trials, fmt_f64(r.mean), fmt_f64(r.ci), r.pass);
            r.pass
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

