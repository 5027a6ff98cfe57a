//! `delaykit`: certify, simulate, sweep, verify, and scan delayed-feedback
//! systems from the command line.
//!
//! Runs are described either by a JSON experiment config (`--config`) or by
//! flags mirroring its fields; flags override file values. Exit codes:
//! 0 success, 1 invalid configuration, 2 negative stability verdict,
//! 3 diverged trajectory.

// Validation guards are written as `!(x > 0)` on purpose: the negated form
// rejects NaN along with the out-of-range values, `x <= 0` would let it pass.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use delaykit::diagnostics::FitSource;
use delaykit::solver::{Integrator, SolverConfig};

use commands::{
    cmd_certify, cmd_scan_reflection, cmd_simulate, cmd_sweep, cmd_verify_bounds, CertBasis,
    CertifyRequest, CliError, EXIT_CONFIG,
};
use config::{
    CertificateSpec, EstimateSpec, ExperimentConfig, FitSpec, GivenConstants, GivenUnbounded,
    InitialKind, KSpec, ModelSpec, OutputPaths, SystemFile,
};

#[derive(Parser)]
#[command(name = "delaykit", version, about = "Delayed-feedback stability toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate stability certificates for one or more gains.
    Certify(CertifyArgs),
    /// Integrate one trajectory and summarize decay, energy, and bounds.
    Simulate(RunArgs),
    /// One summary row per gain over a grid, run concurrently.
    Sweep(RunArgs),
    /// Check a simulated trajectory against its certified envelope.
    VerifyBounds(VerifyArgs),
    /// Scan the boundary reflection coefficient over a frequency window.
    ScanReflection(ScanArgs),
}

#[derive(Args, Clone)]
struct ModelFlags {
    /// Experiment config file (JSON); other flags override its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Catalog model name (see the library catalog).
    #[arg(long, value_name = "NAME")]
    model: Option<String>,
    /// Serialized system JSON file, an alternative to --model.
    #[arg(long, value_name = "FILE")]
    system: Option<PathBuf>,
    /// Model parameter as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    param: Vec<String>,
    /// Shorthand for --param n=<N> (spatial grid size).
    #[arg(long = "N", value_name = "N")]
    n: Option<usize>,
    /// Delay length: a model parameter, or the delay of a constants-only
    /// certify call.
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args, Clone)]
struct GainFlags {
    /// Gain value; repeat the flag for a grid.
    #[arg(long = "k", value_name = "K", allow_hyphen_values = true)]
    k: Vec<f64>,
    /// Inclusive gain grid start:end:step.
    #[arg(long, value_name = "A:B:STEP")]
    k_range: Option<String>,
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Time step; must divide the delay evenly.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long)]
    horizon: Option<f64>,
    /// One-step method: rk4 or implicit-midpoint.
    #[arg(long, value_name = "METHOD")]
    integrator: Option<String>,
    /// Keep every n-th sample.
    #[arg(long, value_name = "N")]
    record_every: Option<usize>,
    /// Norm threshold that flags divergence.
    #[arg(long)]
    blowup_guard: Option<f64>,
}

#[derive(Args, Clone)]
struct InitialFlags {
    /// Initial data: ones, random-unit, or random-zero-history.
    #[arg(long, value_name = "KIND")]
    initial: Option<String>,
    /// Initial-data scale.
    #[arg(long)]
    scale: Option<f64>,
    /// Seed for the initial-data draw.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct CertFlags {
    /// Semigroup overshoot constant.
    #[arg(long = "M", value_name = "M")]
    m: Option<f64>,
    /// Semigroup decay rate.
    #[arg(long)]
    omega: Option<f64>,
    /// Feedback operator norm (bounded route).
    #[arg(long = "Bnorm", value_name = "B")]
    bnorm: Option<f64>,
    /// Reachability admissibility constant (channel route).
    #[arg(long)]
    c1: Option<f64>,
    /// Observability admissibility constant (channel route).
    #[arg(long)]
    c2: Option<f64>,
    /// Composition admissibility constant (channel route).
    #[arg(long)]
    c3: Option<f64>,
    /// Estimate the constants from the model instead of giving them.
    #[arg(long)]
    estimate: bool,
    /// Estimation sampling window end.
    #[arg(long)]
    t_max: Option<f64>,
    /// Estimation sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Estimation stability margin in [0, 1).
    #[arg(long)]
    margin: Option<f64>,
}

impl CertFlags {
    fn any_constant(&self) -> bool {
        self.m.is_some()
            || self.omega.is_some()
            || self.bnorm.is_some()
            || self.c1.is_some()
            || self.c2.is_some()
            || self.c3.is_some()
    }
}

#[derive(Args, Clone)]
struct OutputFlags {
    /// Trajectory CSV (simulate) or row CSV (sweep) destination.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Summary JSON destination.
    #[arg(long, value_name = "FILE")]
    summary: Option<PathBuf>,
    /// Include state columns in the trajectory CSV.
    #[arg(long)]
    states: bool,
}

#[derive(Args, Clone)]
struct FitFlags {
    /// Fit window start.
    #[arg(long)]
    fit_start: Option<f64>,
    /// Fit window end.
    #[arg(long)]
    fit_end: Option<f64>,
    /// Envelope bucket width (defaults to the delay).
    #[arg(long)]
    fit_interval: Option<f64>,
    /// Fit data: norm or energy.
    #[arg(long, value_name = "SOURCE")]
    fit_source: Option<String>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    gains: GainFlags,
    #[command(flatten)]
    cert: CertFlags,
    /// Write the certificate records here (JSON, one per line).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    gains: GainFlags,
    #[command(flatten)]
    solver: SolverFlags,
    #[command(flatten)]
    initial: InitialFlags,
    #[command(flatten)]
    cert: CertFlags,
    #[command(flatten)]
    output: OutputFlags,
    #[command(flatten)]
    fit: FitFlags,
    /// Worker cap for sweep rows.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Relative slack allowed above the envelope.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct ScanArgs {
    /// Boundary stiffness parameter.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Window half-width; the scan covers [-xi_max, xi_max].
    #[arg(long, default_value_t = 200.0)]
    xi_max: f64,
    /// Grid step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Write the scan summary JSON here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the sampled curve CSV here.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CONFIG)
            };
        }
    };
    let result = match cli.command {
        Command::Certify(args) => run_certify(args),
        Command::Simulate(args) => resolve_run(&args).and_then(|c| cmd_simulate(&c)),
        Command::Sweep(args) => resolve_run(&args).and_then(|c| cmd_sweep(&c)),
        Command::VerifyBounds(args) => {
            resolve_run(&args.run).and_then(|c| cmd_verify_bounds(&c, args.tol))
        }
        Command::ScanReflection(args) => {
            cmd_scan_reflection(args.a, args.xi_max, args.step, args.out.as_deref(), args.csv.as_deref())
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        context: format!("reading config {}", path.display()),
        source,
    })?;
    ExperimentConfig::from_json(&text)
        .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
}

fn parse_params(
    pairs: &[String],
    n: Option<usize>,
    tau: Option<f64>,
) -> Result<BTreeMap<String, f64>, CliError> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("flag --param {pair} is not key=value")))?;
        let parsed: f64 = value.trim().parse().map_err(|_| {
            CliError::config(format!("flag --param {key} has a non-numeric value {value}"))
        })?;
        map.insert(key.trim().to_string(), parsed);
    }
    if let Some(n) = n {
        map.insert("n".to_string(), n as f64);
    }
    if let Some(tau) = tau {
        map.insert("tau".to_string(), tau);
    }
    Ok(map)
}

fn parse_k_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, end, step] = parts.as_slice() else {
        return Err(CliError::config(format!("flag --k-range {text} is not start:end:step")));
    };
    let parse = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse()
            .map_err(|_| CliError::config(format!("flag --k-range has a non-numeric part {s}")))
    };
    let (start, end, step) = (parse(start)?, parse(end)?, parse(step)?);
    if !(step > 0.0) || !step.is_finite() {
        return Err(CliError::config("flag --k-range needs a positive step"));
    }
    if end < start {
        return Err(CliError::config("flag --k-range needs end >= start"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + step * i as f64).collect())
}

fn gather_ks(gains: &GainFlags) -> Result<Vec<f64>, CliError> {
    let mut ks = gains.k.clone();
    if let Some(range) = &gains.k_range {
        ks.extend(parse_k_range(range)?);
    }
    Ok(ks)
}

fn parse_integrator(text: &str) -> Result<Integrator, CliError> {
    match text {
        "rk4" => Ok(Integrator::Rk4),
        "implicit-midpoint" => Ok(Integrator::ImplicitMidpoint),
        other => Err(CliError::config(format!(
            "flag --integrator {other} is not rk4 or implicit-midpoint"
        ))),
    }
}

fn parse_initial_kind(text: &str) -> Result<InitialKind, CliError> {
    match text {
        "ones" => Ok(InitialKind::Ones),
        "random-unit" => Ok(InitialKind::RandomUnit),
        "random-zero-history" => Ok(InitialKind::RandomZeroHistory),
        other => Err(CliError::config(format!(
            "flag --initial {other} is not ones, random-unit, or random-zero-history"
        ))),
    }
}

fn parse_fit_source(text: &str) -> Result<FitSource, CliError> {
    match text {
        "norm" => Ok(FitSource::Norm),
        "energy" => Ok(FitSource::Energy),
        other => Err(CliError::config(format!("flag --fit-source {other} is not norm or energy"))),
    }
}

/// Model from flags, or from the config file when no flag names one.
fn resolve_model(flags: &ModelFlags, base: Option<ModelSpec>) -> Result<ModelSpec, CliError> {
    let mut spec = match (&flags.model, &flags.system) {
        (Some(_), Some(_)) => {
            return Err(CliError::config("flags --model and --system conflict; give one"))
        }
        (Some(name), None) => ModelSpec::catalog(name, BTreeMap::new()),
        (None, Some(path)) => ModelSpec::File(SystemFile { file: path.clone() }),
        (None, None) => {
            base.ok_or_else(|| CliError::config("missing required key: model"))?
        }
    };
    let extra = parse_params(&flags.param, flags.n, flags.tau)?;
    if !extra.is_empty() {
        match &mut spec {
            ModelSpec::Catalog(c) => c.params.extend(extra),
            ModelSpec::File(_) => {
                return Err(CliError::config(
                    "flags --param/--N/--tau describe catalog models, not system files",
                ))
            }
        }
    }
    Ok(spec)
}

/// Certificate spec from flags: explicit constants, the estimate directive,
/// or nothing.
fn cert_spec_from_flags(cert: &CertFlags) -> Result<Option<CertificateSpec>, CliError> {
    if cert.estimate {
        if cert.any_constant() {
            return Err(CliError::config(
                "flag --estimate conflicts with explicit certificate constants",
            ));
        }
        let mut spec = EstimateSpec::default();
        if let Some(t_max) = cert.t_max {
            spec.t_max = t_max;
        }
        if let Some(samples) = cert.samples {
            spec.samples = samples;
        }
        if let Some(margin) = cert.margin {
            spec.margin = margin;
        }
        return Ok(Some(CertificateSpec::Estimate(spec)));
    }
    if !cert.any_constant() {
        return Ok(None);
    }
    let m = cert.m.ok_or_else(|| CliError::config("missing required key: M"))?;
    let omega = cert.omega.ok_or_else(|| CliError::config("missing required key: omega"))?;
    match (cert.c1, cert.c2, cert.c3) {
        (Some(c1), Some(c2), Some(c3)) => {
            if cert.bnorm.is_some() {
                return Err(CliError::config(
                    "flags --Bnorm and --c1/--c2/--c3 conflict; pick one route",
                ));
            }
            Ok(Some(CertificateSpec::GivenUnbounded(GivenUnbounded { m, omega, c1, c2, c3 })))
        }
        (None, None, None) => {
            let bnorm = cert.bnorm.ok_or_else(|| CliError::config("missing required key: Bnorm"))?;
            Ok(Some(CertificateSpec::Given(GivenConstants { m, omega, bnorm })))
        }
        _ => Err(CliError::config("the channel route needs all of --c1 --c2 --c3")),
    }
}

/// Constants-only certify route; the delay comes from the --tau flag.
fn basis_from_flags(cert: &CertFlags, tau: Option<f64>) -> Result<CertBasis, CliError> {
    let tau = tau.ok_or_else(|| CliError::config("missing required key: tau"))?;
    let spec = cert_spec_from_flags(cert)?
        .ok_or_else(|| CliError::config("missing required key: M (or --estimate with a model)"))?;
    match spec {
        CertificateSpec::Given(g) => {
            Ok(CertBasis::Bounded { m: g.m, omega: g.omega, tau, bnorm: g.bnorm })
        }
        CertificateSpec::GivenUnbounded(g) => Ok(CertBasis::Unbounded {
            m: g.m,
            omega: g.omega,
            tau,
            c1: g.c1,
            c2: g.c2,
            c3: g.c3,
        }),
        CertificateSpec::Estimate(_) => {
            Err(CliError::config("flag --estimate needs --model, --system, or --config"))
        }
    }
}

fn run_certify(args: CertifyArgs) -> Result<u8, CliError> {
    let flag_ks = gather_ks(&args.gains)?;
    if let Some(path) = &args.model.config {
        let config = load_config(path)?;
        let ks = if flag_ks.is_empty() { config.k.values() } else { flag_ks };
        let spec = cert_spec_from_flags(&args.cert)?
            .or(config.certificate)
            .ok_or_else(|| CliError::config("missing required key: certificate"))?;
        return cmd_certify(
            CertifyRequest::FromModel { model: config.model, spec, ks },
            args.out.as_deref(),
        );
    }
    if args.model.model.is_none() && args.model.system.is_none() {
        let basis = basis_from_flags(&args.cert, args.model.tau)?;
        return cmd_certify(CertifyRequest::Constants { basis, ks: flag_ks }, args.out.as_deref());
    }
    let model = resolve_model(&args.model, None)?;
    let spec = cert_spec_from_flags(&args.cert)?.ok_or_else(|| {
        CliError::config("certify with a model needs --estimate or explicit constants")
    })?;
    cmd_certify(CertifyRequest::FromModel { model, spec, ks: flag_ks }, args.out.as_deref())
}

/// Merge the config file (if any) with flag overrides into a full config.
fn resolve_run(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let base = match &args.model.config {
        Some(path) => Some(load_config(path)?),
        None => None,
    };

    let model = resolve_model(&args.model, base.as_ref().map(|c| c.model.clone()))?;

    let flag_ks = gather_ks(&args.gains)?;
    let k = if flag_ks.is_empty() {
        base.as_ref()
            .map(|c| c.k.clone())
            .ok_or_else(|| CliError::config("missing required key: k"))?
    } else if flag_ks.len() == 1 {
        KSpec::One(flag_ks[0])
    } else {
        KSpec::Grid(flag_ks)
    };

    let mut solver = match &base {
        Some(config) => config.solver,
        None => {
            // Defaults need the delay, which lives in the built model.
            let probe_k = k.values().first().copied().unwrap_or(0.0);
            let tau = commands::build_system(&model, probe_k)?.tau;
            SolverConfig::new(tau / 128.0, 20.0 * tau)
        }
    };
    if let Some(dt) = args.solver.dt {
        solver.dt = dt;
    }
    if let Some(horizon) = args.solver.horizon {
        solver.horizon = horizon;
    }
    if let Some(text) = &args.solver.integrator {
        solver.integrator = parse_integrator(text)?;
    }
    if let Some(n) = args.solver.record_every {
        solver.record_every = n;
    }
    if let Some(guard) = args.solver.blowup_guard {
        solver.blowup_guard = guard;
    }

    let mut initial = base.as_ref().map(|c| c.initial).unwrap_or_default();
    if let Some(text) = &args.initial.initial {
        initial.kind = parse_initial_kind(text)?;
    }
    if let Some(scale) = args.initial.scale {
        initial.scale = scale;
    }
    let seed = args.initial.seed.or(base.as_ref().map(|c| c.seed)).unwrap_or(0);

    let certificate =
        cert_spec_from_flags(&args.cert)?.or_else(|| base.as_ref().and_then(|c| c.certificate.clone()));

    let mut output = base.as_ref().map(|c| c.output.clone()).unwrap_or_else(OutputPaths::default);
    if let Some(path) = &args.output.csv {
        output.csv = Some(path.clone());
    }
    if let Some(path) = &args.output.summary {
        output.summary = Some(path.clone());
    }
    if args.output.states {
        output.states = true;
    }

    let mut fit = base.as_ref().and_then(|c| c.fit).unwrap_or_default();
    if let Some(v) = args.fit.fit_start {
        fit.start = Some(v);
    }
    if let Some(v) = args.fit.fit_end {
        fit.end = Some(v);
    }
    if let Some(v) = args.fit.fit_interval {
        fit.interval = Some(v);
    }
    if let Some(text) = &args.fit.fit_source {
        fit.source = Some(parse_fit_source(text)?);
    }
    let fit = if fit == FitSpec::default() { None } else { Some(fit) };

    let workers = args.workers.or(base.as_ref().and_then(|c| c.workers));

    Ok(ExperimentConfig { model, solver, k, certificate, initial, seed, output, fit, workers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_range_is_inclusive_and_uniform() {
        let ks = parse_k_range("0.1:0.5:0.1").unwrap();
        assert_eq!(ks.len(), 5);
        assert_eq!(ks[0], 0.1);
        assert_eq!(ks[4], 0.5);
        assert!(parse_k_range("1:0:0.1").is_err());
        assert!(parse_k_range("0:1:-0.1").is_err());
        assert!(parse_k_range("0:1").is_err());
    }

    #[test]
    fn params_collect_pairs_and_shorthands() {
        let pairs = vec!["a=2.0".to_string(), "beta = 3".to_string()];
        let map = parse_params(&pairs, Some(50), Some(0.25)).unwrap();
        assert_eq!(map["a"], 2.0);
        assert_eq!(map["beta"], 3.0);
        assert_eq!(map["n"], 50.0);
        assert_eq!(map["tau"], 0.25);
        assert!(parse_params(&["oops".to_string()], None, None).is_err());
    }

    #[test]
    fn cert_flags_require_complete_routes() {
        let mut flags = CertFlags {
            m: Some(1.0),
            omega: None,
            bnorm: Some(1.0),
            c1: None,
            c2: None,
            c3: None,
            estimate: false,
            t_max: None,
            samples: None,
            margin: None,
        };
        let err = cert_spec_from_flags(&flags).unwrap_err().to_string();
        assert!(err.contains("omega"), "{err}");
        flags.omega = Some(1.0);
        assert!(matches!(cert_spec_from_flags(&flags).unwrap(), Some(CertificateSpec::Given(_))));
        flags.estimate = true;
        assert!(cert_spec_from_flags(&flags).is_err());
    }

    #[test]
    fn integrator_and_initial_parsers_reject_unknowns() {
        assert_eq!(parse_integrator("rk4").unwrap(), Integrator::Rk4);
        assert!(parse_integrator("euler").is_err());
        assert_eq!(parse_initial_kind("ones").unwrap(), InitialKind::Ones);
        assert!(parse_initial_kind("zeros").is_err());
        assert_eq!(parse_fit_source("energy").unwrap(), FitSource::Energy);
        assert!(parse_fit_source("state").is_err());
    }
}
