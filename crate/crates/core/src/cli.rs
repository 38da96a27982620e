//! The `qexp` command-line tool.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error, 3 non-convergence.
//! Every command that draws random numbers takes `--seed`; output for a
//! given seed does not depend on `--threads`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baseline::{curvefit, r_squared};
use crate::diagnostics::{gof_bootstrap, spec_report};
use crate::distribution::ThetaSigma;
use crate::error::Error;
use crate::estimation::{self, FitResult, SolverConfig};
use crate::harness::{self, ExperimentPlan, Method};
use crate::inference::{covariance_report_with, FreeParams, InfoKind};
use crate::ingest::ingest;
use crate::par;
use crate::report::{self, FitReport, ValidateReport, VERSION};
use crate::resampling::{bootstrap, BootstrapConfig, BootstrapMode, Refit};
use crate::rng::RngStream;
use crate::sample::Sample;

/// Stream index reserved for the goodness-of-fit bootstrap.
const GOF_STREAM: u64 = 1;
const DEFAULT_GOF_REPLICATES: usize = 1000;
const GOF_LEVEL: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "qexp", version, about = "Fit and simulate q-exponential distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximum-likelihood fit of a data file.
    Fit(FitArgs),
    /// Draw values from a q-exponential distribution.
    Sample(SampleArgs),
    /// Monte Carlo comparison of MLE and curve fitting.
    Experiment(ExperimentArgs),
    /// Goodness-of-fit and mis-specification checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BootModeArg {
    Parametric,
    Nonparametric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InfoArg {
    Expected,
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mle,
    Curvefit,
}

/// A decimal or a ratio `a/b` of decimals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Number {
    pub num: f64,
    pub den: f64,
}

impl Number {
    pub fn value(self) -> f64 {
        self.num / self.den
    }
}

fn parse_number(s: &str) -> Result<Number, String> {
    let parse = |t: &str| -> Result<f64, String> {
        let v: f64 = t.trim().parse().map_err(|_| format!("not a number: {t:?}"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("not finite: {t:?}"))
        }
    };
    let n = match s.split_once('/') {
        Some((a, b)) => Number {
            num: parse(a)?,
            den: parse(b)?,
        },
        None => Number { num: parse(s)?, den: 1.0 },
    };
    if n.den == 0.0 {
        return Err("zero denominator".into());
    }
    Ok(n)
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("level must lie in (0, 1), got {v}"))
    }
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("threshold must be finite and >= 0, got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be finite and > 0, got {v}"))
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input file, one value per line.
    pub path: PathBuf,
    /// Left-censoring threshold x0.
    #[arg(long, value_parser = parse_threshold)]
    pub censor: Option<f64>,
    /// Hold θ fixed and estimate σ.
    #[arg(long, value_parser = parse_positive, conflicts_with = "fix_sigma")]
    pub fix_theta: Option<f64>,
    /// Hold σ fixed and estimate θ.
    #[arg(long, value_parser = parse_positive)]
    pub fix_sigma: Option<f64>,
    /// Bootstrap replicates.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub boot: Option<u64>,
    #[arg(long, value_enum, default_value = "parametric")]
    pub boot_mode: BootModeArg,
    /// Confidence level for all intervals.
    #[arg(long, value_parser = parse_level, default_value = "0.9")]
    pub ci: f64,
    /// Bootstrap-calibrated Kolmogorov–Smirnov test.
    #[arg(long)]
    pub gof: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "expected")]
    pub info: InfoArg,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_parser = parse_number)]
    pub theta: Option<Number>,
    #[arg(long, value_parser = parse_number)]
    pub sigma: Option<Number>,
    #[arg(long, value_parser = parse_number)]
    pub q: Option<Number>,
    #[arg(long, value_parser = parse_number)]
    pub kappa: Option<Number>,
    /// Number of values.
    #[arg(short = 'n', value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Draw from the tail above x0 only.
    #[arg(long, value_parser = parse_threshold)]
    pub censor: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = harness::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, value_parser = parse_positive, default_value = "3")]
    pub theta: f64,
    #[arg(long, value_parser = parse_positive, default_value = "200")]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Writes `<prefix>_raw.csv` and `<prefix>_summary.csv`.
    #[arg(long)]
    pub out_prefix: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mle,curvefit")]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub path: PathBuf,
    #[arg(long, value_parser = parse_threshold)]
    pub censor: Option<f64>,
    /// Replicates for each bootstrap.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = 500)]
    pub boot: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Usage(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::NonConvergence(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence(_) | Error::BootstrapUnstable { .. } | Error::GofUnstable { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Parses arguments, runs the command, and maps the outcome to an exit code.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let mut buf = Vec::new();
    let result = run(cli, &mut buf);
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(&buf).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(1);
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qexp: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run<W: Write + Send>(cli: Cli, out: &mut W) -> Result<(), CliError> {
    let threads = match &cli.command {
        Command::Fit(a) => a.threads,
        Command::Experiment(a) => a.threads,
        Command::Validate(a) => a.threads,
        Command::Sample(_) => None,
    };
    par::with_threads(threads.map(|t| t as usize), move || match cli.command {
        Command::Fit(a) => cmd_fit(&a, out),
        Command::Sample(a) => cmd_sample(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::Validate(a) => cmd_validate(&a, out),
    })
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn load(path: &Path, censor: Option<f64>) -> Result<Sample, CliError> {
    ingest(path, censor).map_err(|e| match e {
        Error::Io(io) => io_error(path, io),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

fn emit<T: serde::Serialize, W: Write>(report: &T, format: Format, out: &mut W) -> Result<(), CliError> {
    let text = match format {
        Format::Json => report::to_json(report) + "\n",
        Format::Text => report::to_text(report),
    };
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Data(format!("writing output: {e}")))
}

pub fn cmd_fit<W: Write>(a: &FitArgs, out: &mut W) -> Result<(), CliError> {
    let s = load(&a.path, a.censor)?;
    let solver = SolverConfig::default();
    let (refit, free) = match (a.fix_theta, a.fix_sigma) {
        (Some(t), _) => (Refit::FixedTheta(t), FreeParams::SigmaOnly),
        (_, Some(sg)) => (Refit::FixedSigma(sg), FreeParams::ThetaOnly),
        _ => (Refit::Joint, FreeParams::Both),
    };
    let fit = refit.apply(&s, &solver)?;
    let info = match a.info {
        InfoArg::Expected => InfoKind::Expected,
        InfoArg::Observed => InfoKind::Observed,
    };
    let mut rep = FitReport::new(&a.path.display().to_string(), a.seed, &s, &fit, info);
    rep.fixed_theta = a.fix_theta;
    rep.fixed_sigma = a.fix_sigma;

    if !fit.converged || !fit.is_interior() {
        rep.notes.push(format!(
            "no interior maximum: estimate stopped at {} (converged = {})",
            fit.boundary_flag.as_str(),
            fit.converged
        ));
        emit(&rep, a.format, out)?;
        return Err(CliError::NonConvergence(format!(
            "{}: no interior maximum-likelihood estimate",
            a.path.display()
        )));
    }
    match covariance_report_with(&s, &fit, info, a.ci, free) {
        Ok(c) => rep.set_covariance(&c),
        Err(e) => rep.notes.push(format!("standard errors unavailable: {e}")),
    }

    let seed = RngStream::from_seed(a.seed);
    let mut failure = None;
    if let Some(b) = a.boot {
        let cfg = BootstrapConfig {
            replicates: b as usize,
            level: a.ci,
            mode: match a.boot_mode {
                BootModeArg::Parametric => BootstrapMode::Parametric,
                BootModeArg::Nonparametric => BootstrapMode::Nonparametric,
            },
            seed,
            solver,
            refit,
        };
        match bootstrap(&s, &fit, &cfg) {
            Ok(summary) => {
                if summary.successes() < crate::resampling::MIN_CI_REPLICATES {
                    rep.notes.push(format!(
                        "bootstrap percentile intervals need at least {} successful replicates",
                        crate::resampling::MIN_CI_REPLICATES
                    ));
                }
                rep.bootstrap = Some(summary);
            }
            Err(Error::BootstrapUnstable {
                failures,
                total,
                partial,
            }) => {
                rep.notes.push(format!("bootstrap unstable: {failures} of {total} replicates failed"));
                rep.bootstrap = Some(*partial);
                failure = Some(CliError::NonConvergence(format!(
                    "bootstrap unstable: {failures} of {total} replicates failed"
                )));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if a.gof && failure.is_none() {
        let cfg = BootstrapConfig {
            replicates: a.boot.map_or(DEFAULT_GOF_REPLICATES, |b| b as usize),
            seed: RngStream::new(a.seed, GOF_STREAM),
            solver,
            refit,
            ..Default::default()
        };
        match gof_bootstrap(&s, &fit, &cfg) {
            Ok(g) => rep.gof = Some(g),
            Err(e) => {
                rep.notes.push(e.to_string());
                failure = Some(e.into());
            }
        }
    }
    emit(&rep, a.format, out)?;
    failure.map_or(Ok(()), Err)
}

/// Resolves the parameterization, converting ratios exactly where possible.
fn sample_params(a: &SampleArgs) -> Result<ThetaSigma, CliError> {
    let usage = |m: &str| CliError::Usage(m.to_string());
    let invalid = |e: Error| CliError::Usage(e.to_string());
    match (a.theta, a.sigma, a.q, a.kappa) {
        (Some(t), Some(s), None, None) => ThetaSigma::new(t.value(), s.value()).map_err(invalid),
        (None, None, Some(q), Some(k)) => {
            if !(q.value() > 1.0) {
                return Err(invalid(Error::UnsupportedBranch { q: q.value() }));
            }
            // θ = 1/(q − 1) = den/(num − den); σ = κθ.
            let theta = q.den / (q.num - q.den);
            let sigma = k.num * theta / k.den;
            ThetaSigma::new(theta, sigma).map_err(invalid)
        }
        (None, None, None, None) => Err(usage("give either --theta and --sigma or --q and --kappa")),
        (t, s, None, None) if t.is_some() != s.is_some() => {
            Err(usage("--theta and --sigma must be given together"))
        }
        (None, None, q, k) if q.is_some() != k.is_some() => {
            Err(usage("--q and --kappa must be given together"))
        }
        _ => Err(usage("give exactly one parameterization: --theta/--sigma or --q/--kappa")),
    }
}

pub fn cmd_sample<W: Write>(a: &SampleArgs, out: &mut W) -> Result<(), CliError> {
    let p = sample_params(a)?;
    let stream = RngStream::from_seed(a.seed);
    let s = p.sample_tail(a.censor.unwrap_or(0.0), a.n as usize, &stream);
    let mut w = BufWriter::new(out);
    for v in s.values() {
        writeln!(w, "{v:.16e}").map_err(|e| CliError::Data(format!("writing output: {e}")))?;
    }
    w.flush().map_err(|e| CliError::Data(format!("writing output: {e}")))
}

pub fn cmd_experiment<W: Write>(a: &ExperimentArgs, out: &mut W) -> Result<(), CliError> {
    let truth = ThetaSigma::new(a.theta, a.sigma).map_err(|e| CliError::Usage(e.to_string()))?;
    let plan = ExperimentPlan {
        sizes: a.sizes.clone(),
        reps: a.reps,
        methods: a
            .methods
            .iter()
            .map(|m| match m {
                MethodArg::Mle => Method::Mle,
                MethodArg::Curvefit => Method::Curvefit,
            })
            .collect(),
        ..ExperimentPlan::new(truth, RngStream::from_seed(a.seed))
    };
    plan.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let summary = harness::run_experiment(&plan)?;

    let prefix = a.out_prefix.display().to_string();
    let raw_path = PathBuf::from(format!("{prefix}_raw.csv"));
    let summary_path = PathBuf::from(format!("{prefix}_summary.csv"));
    let write = |path: &Path, f: &dyn Fn(&mut BufWriter<File>) -> crate::error::Result<()>| {
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(|e| io_error(path, e))?;
        w.flush().map_err(|e| io_error(path, e))
    };
    write(&raw_path, &|w| harness::write_raw_csv(&summary, w))?;
    write(&summary_path, &|w| harness::write_summary_csv(&summary, w))?;
    harness::write_summary_csv(&summary, &mut *out)
        .map_err(|e| CliError::Data(format!("writing output: {e}")))
}

pub fn cmd_validate<W: Write>(a: &ValidateArgs, out: &mut W) -> Result<(), CliError> {
    let s = load(&a.path, a.censor)?;
    let solver = SolverConfig::default();
    let fit: FitResult = estimation::fit(&s, &solver)?;
    if !fit.converged {
        return Err(CliError::NonConvergence(format!(
            "{}: maximum-likelihood fit did not converge",
            a.path.display()
        )));
    }
    let boot = BootstrapConfig {
        replicates: a.boot as usize,
        seed: RngStream::from_seed(a.seed),
        solver,
        ..Default::default()
    };
    let gof = gof_bootstrap(
        &s,
        &fit,
        &BootstrapConfig {
            seed: RngStream::new(a.seed, GOF_STREAM),
            ..boot
        },
    )?;
    let spec = spec_report(&s, &fit, &boot)?;
    let (r_squared_mle, r_squared_curvefit) = if s.is_censored() {
        (None, None)
    } else {
        (
            r_squared(&s, &fit.params).ok(),
            curvefit(&s, &solver).ok().map(|c| c.r_squared),
        )
    };

    let mut flags = Vec::new();
    if !fit.is_interior() {
        flags.push(format!(
            "heuristic: likelihood maximized at the {} of the search range",
            fit.boundary_flag.as_str()
        ));
    }
    if gof.p_value < GOF_LEVEL {
        flags.push(format!(
            "heuristic: bootstrap KS p-value {:.4} is below {GOF_LEVEL}",
            gof.p_value
        ));
    }
    flags.extend(spec.notes.iter().cloned());
    let rep = ValidateReport {
        version: VERSION,
        source: a.path.display().to_string(),
        seed: a.seed,
        n: s.n(),
        x0: s.x0(),
        theta: fit.params.theta(),
        sigma: fit.params.sigma(),
        q: fit.params_qk.q(),
        kappa: fit.params_qk.kappa(),
        loglik: fit.loglik,
        converged: fit.converged,
        boundary_flag: fit.boundary_flag,
        r_squared_mle,
        r_squared_curvefit,
        gof,
        spec,
        flags,
    };
    emit(&rep, a.format, out)
}
