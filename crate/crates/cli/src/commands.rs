//! The work behind each subcommand: build, run, summarize, write, and map
//! the outcome to the exit-code contract.
//!
//! Exit codes: 0 success (and certified/verified where that applies),
//! 1 invalid configuration, 2 a negative stability verdict (gain at or above
//! the threshold, or an envelope violation), 3 a diverged trajectory.

use std::fs;
use std::path::Path;

use delaykit::certificates::{
    bounded_certificate, history_weight_alpha, unbounded_certificate, StabilityCertificate,
};
use delaykit::diagnostics::{
    energy_monotone_check, energy_series, estimate_semigroup_for, fit_decay_rate,
    reflection_coefficient, reflection_scan, verify_iterative_bound, BoundReport, DecayFit,
    FitSource,
};
use delaykit::history::History;
use delaykit::linalg::weighted_op_norm;
use delaykit::models::build_by_name;
use delaykit::solver::{solve_method_of_steps, Integrator};
use delaykit::system::DelaySystem;
use delaykit::trajectory::Trajectory;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    CertificateSpec, ExperimentConfig, InitialData, InitialKind, ModelSpec,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NOT_CERTIFIED: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

/// Slack used for the envelope check embedded in a simulate summary; the
/// verify-bounds command takes the tolerance as a flag instead.
const EMBEDDED_BOUND_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] delaykit::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

/// Build the system for one gain value. The gain always comes from the
/// top level: it is injected into catalog parameters and overrides the
/// stored gain of a system file.
pub fn build_system(model: &ModelSpec, k: f64) -> Result<DelaySystem<f64>, CliError> {
    match model {
        ModelSpec::Catalog(c) => {
            if c.params.contains_key("k") {
                return Err(CliError::config(
                    "key params.k conflicts with the top-level gain; set k once at the top level",
                ));
            }
            let mut params = c.params.clone();
            params.insert("k".to_string(), k);
            Ok(build_by_name(&c.name, &params)?)
        }
        ModelSpec::File(f) => {
            let text = fs::read_to_string(&f.file).map_err(|source| CliError::Io {
                context: format!("reading system file {}", f.file.display()),
                source,
            })?;
            let mut system = DelaySystem::<f64>::from_json(&text)?;
            system.k = k;
            Ok(system)
        }
    }
}

/// Number of history samples implied by the step size.
pub fn history_steps(tau: f64, dt: f64) -> Result<usize, CliError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CliError::config("key solver.dt must be positive and finite"));
    }
    let m = (tau / dt).round();
    if !(m >= 1.0) || (m * dt - tau).abs() > 1e-9 * tau.max(1.0) {
        return Err(CliError::config(format!(
            "key solver.dt must divide the delay evenly: tau = {tau}, dt = {dt}"
        )));
    }
    Ok(m as usize)
}

/// Initial state and trailing channel history per the config.
pub fn initial_data(
    system: &DelaySystem<f64>,
    initial: InitialData,
    seed: u64,
    m: usize,
) -> Result<(DVector<f64>, History<f64>), CliError> {
    if !(initial.scale > 0.0) || !initial.scale.is_finite() {
        return Err(CliError::config("key initial.scale must be positive and finite"));
    }
    let dim = system.dim();
    let u0 = match initial.kind {
        InitialKind::Ones => DVector::from_element(dim, initial.scale),
        InitialKind::RandomUnit | InitialKind::RandomZeroHistory => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
            let norm = system.state_norm(&raw);
            if !(norm > 0.0) {
                return Err(CliError::config("seeded initial draw is degenerate; change the seed"));
            }
            raw * (initial.scale / norm)
        }
    };
    let history = match initial.kind {
        InitialKind::RandomZeroHistory => History::zero(system.tau, m, system.channel_dim())?,
        _ => History::constant(system.tau, m, system.output(&u0))?,
    };
    Ok((u0, history))
}

/// One solved run with everything needed to summarize it.
pub struct RunOutcome {
    pub system: DelaySystem<f64>,
    pub u0: DVector<f64>,
    pub history: History<f64>,
    pub trajectory: Trajectory<f64>,
}

pub fn run_single(config: &ExperimentConfig, k: f64) -> Result<RunOutcome, CliError> {
    let system = build_system(&config.model, k)?;
    let m = history_steps(system.tau, config.solver.dt)?;
    let (u0, history) = initial_data(&system, config.initial, config.seed, m)?;
    let trajectory = solve_method_of_steps(&system, &u0, &history, &config.solver)?;
    Ok(RunOutcome { system, u0, history, trajectory })
}

fn fit_from_config(
    config: &ExperimentConfig,
    system: &DelaySystem<f64>,
    traj: &Trajectory<f64>,
) -> delaykit::Result<DecayFit<f64>> {
    let spec = config.fit.unwrap_or_default();
    let start = spec.start.unwrap_or(0.0);
    let end = spec.end.unwrap_or_else(|| traj.last_time().unwrap_or(0.0));
    let interval = spec.interval.unwrap_or(system.tau);
    let source = spec.source.unwrap_or(FitSource::Norm);
    fit_decay_rate(traj, (start, end), interval, source)
}

/// Resolved certificate inputs; `certify` evaluates these per gain.
#[derive(Debug, Clone, Copy)]
pub enum CertBasis {
    Bounded { m: f64, omega: f64, tau: f64, bnorm: f64 },
    Unbounded { m: f64, omega: f64, tau: f64, c1: f64, c2: f64, c3: f64 },
}

impl CertBasis {
    pub fn certify(&self, k: f64) -> delaykit::Result<StabilityCertificate<f64>> {
        match *self {
            CertBasis::Bounded { m, omega, tau, bnorm } => {
                bounded_certificate(m, omega, tau, bnorm, k)
            }
            CertBasis::Unbounded { m, omega, tau, c1, c2, c3 } => {
                unbounded_certificate(m, omega, tau, c1, c2, c3, k)
            }
        }
    }
}

/// Turn a certificate spec into concrete constants, estimating from the
/// system when asked to.
pub fn resolve_certificate(
    spec: &CertificateSpec,
    system: &DelaySystem<f64>,
) -> Result<CertBasis, CliError> {
    let tau = system.tau;
    Ok(match spec {
        CertificateSpec::Given(g) => {
            CertBasis::Bounded { m: g.m, omega: g.omega, tau, bnorm: g.bnorm }
        }
        CertificateSpec::GivenUnbounded(g) => CertBasis::Unbounded {
            m: g.m,
            omega: g.omega,
            tau,
            c1: g.c1,
            c2: g.c2,
            c3: g.c3,
        },
        CertificateSpec::Estimate(e) => {
            let est = estimate_semigroup_for(system, e.t_max, e.samples, e.margin)?;
            let factor = system.gram_factor()?;
            let bnorm =
                weighted_op_norm(&system.feedback_matrix(), factor.as_ref(), factor.as_ref());
            if !(bnorm > 0.0) {
                return Err(CliError::config(
                    "estimated feedback norm is zero; certificates need a nonzero delayed term",
                ));
            }
            CertBasis::Bounded { m: est.m, omega: est.omega, tau, bnorm }
        }
    })
}

/// What `certify` should certify.
pub enum CertifyRequest {
    /// Constants given outright; no model involved.
    Constants { basis: CertBasis, ks: Vec<f64> },
    /// Constants taken or estimated from a model.
    FromModel { model: ModelSpec, spec: CertificateSpec, ks: Vec<f64> },
}

/// Evaluate certificates and emit one flat JSON record per gain.
pub fn cmd_certify(request: CertifyRequest, out: Option<&Path>) -> Result<u8, CliError> {
    let (basis, ks) = match request {
        CertifyRequest::Constants { basis, ks } => (basis, ks),
        CertifyRequest::FromModel { model, spec, ks } => {
            let probe = build_system(&model, ks.first().copied().unwrap_or(0.0))?;
            (resolve_certificate(&spec, &probe)?, ks)
        }
    };
    if ks.is_empty() {
        return Err(CliError::config("key k needs at least one gain"));
    }
    let mut lines = String::new();
    let mut all_stable = true;
    for &k in &ks {
        let cert = basis.certify(k)?;
        all_stable &= cert.stable;
        lines.push_str(&serde_json::to_string(&cert)?);
        lines.push('\n');
    }
    print!("{lines}");
    if let Some(path) = out {
        write_text(path, &lines)?;
    }
    Ok(if all_stable { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergySummary {
    pub e0: f64,
    pub e_last: f64,
    pub tol: f64,
    pub violations: usize,
    pub first_violation: Option<usize>,
}

/// Fixed-key summary of one simulate run; absent quantities are null.
#[derive(Serialize)]
pub struct SimulateSummary {
    pub command: &'static str,
    pub model: String,
    pub k: f64,
    pub tau: f64,
    pub dt: f64,
    pub horizon: f64,
    pub integrator: Integrator,
    pub seed: u64,
    pub diverged: bool,
    pub last_valid_time: Option<f64>,
    pub samples: usize,
    pub rate_fit: Option<f64>,
    pub fit: Option<DecayFit<f64>>,
    pub fit_error: Option<String>,
    pub certificate: Option<StabilityCertificate<f64>>,
    pub guaranteed_rate: Option<f64>,
    pub rate_margin: Option<f64>,
    pub energy: Option<EnergySummary>,
    pub energy_error: Option<String>,
    pub bound: Option<BoundReport<f64>>,
    pub bound_error: Option<String>,
}

pub fn cmd_simulate(config: &ExperimentConfig) -> Result<u8, CliError> {
    let k = config.k.single().map_err(CliError::Config)?;
    let mut outcome = run_single(config, k)?;

    let (energy, energy_error) = if config.solver.record_every == 1 {
        match energy_series(&outcome.system, &outcome.trajectory, &outcome.history) {
            Ok(es) => {
                let e0 = es.first().copied().unwrap_or(0.0);
                let e_last = es.last().copied().unwrap_or(0.0);
                let tol = 1e-10 * e0.abs();
                let violations = energy_monotone_check(&es, tol);
                let summary = EnergySummary {
                    e0,
                    e_last,
                    tol,
                    violations: violations.len(),
                    first_violation: violations.first().copied(),
                };
                outcome.trajectory.energies = Some(es);
                (Some(summary), None)
            }
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("energy series needs every solver step recorded".to_string()))
    };

    let (fit, fit_error) = if outcome.trajectory.diverged {
        (None, Some("trajectory diverged before the fit window closed".to_string()))
    } else {
        match fit_from_config(config, &outcome.system, &outcome.trajectory) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    let mut certificate = None;
    let mut guaranteed_rate = None;
    let mut rate_margin = None;
    let mut bound = None;
    let mut bound_error = None;
    if let Some(spec) = &config.certificate {
        let basis = resolve_certificate(spec, &outcome.system)?;
        let cert = basis.certify(k)?;
        guaranteed_rate = Some(cert.omega - cert.sigma);
        rate_margin = fit.as_ref().map(|f| f.rate_fit - (cert.omega - cert.sigma));
        if !cert.stable {
            bound_error = Some(format!("gain {k} is not certified (k0 = {})", cert.k0));
        } else if outcome.trajectory.diverged {
            bound_error = Some("trajectory diverged; envelope not checked".to_string());
        } else {
            let result = history_weight_alpha(
                &outcome.history,
                cert.omega,
                Some(&outcome.system.output_weights),
            )
            .and_then(|alpha| {
                let u0_norm = outcome.system.state_norm(&outcome.u0);
                verify_iterative_bound(
                    &outcome.trajectory,
                    &cert,
                    u0_norm,
                    alpha,
                    EMBEDDED_BOUND_TOL,
                )
            });
            match result {
                Ok(report) => bound = Some(report),
                Err(e) => bound_error = Some(e.to_string()),
            }
        }
        certificate = Some(cert);
    }

    if let Some(path) = &config.output.csv {
        let mut buf = Vec::new();
        outcome
            .trajectory
            .write_csv(&mut buf, config.output.states)
            .map_err(|source| CliError::Io { context: "rendering trajectory CSV".into(), source })?;
        fs::write(path, &buf).map_err(|source| CliError::Io {
            context: format!("writing {}", path.display()),
            source,
        })?;
    }

    let summary = SimulateSummary {
        command: "simulate",
        model: config.model.label(),
        k,
        tau: outcome.system.tau,
        dt: config.solver.dt,
        horizon: config.solver.horizon,
        integrator: config.solver.integrator,
        seed: config.seed,
        diverged: outcome.trajectory.diverged,
        last_valid_time: outcome.trajectory.last_time(),
        samples: outcome.trajectory.len(),
        rate_fit: fit.as_ref().map(|f| f.rate_fit),
        fit,
        fit_error,
        certificate,
        guaranteed_rate,
        rate_margin,
        energy,
        energy_error,
        bound,
        bound_error,
    };
    let text = format!("{}\n", serde_json::to_string_pretty(&summary)?);
    print!("{text}");
    if let Some(path) = &config.output.summary {
        write_text(path, &text)?;
    }

    Ok(if summary.diverged { EXIT_DIVERGED } else { EXIT_OK })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub k: f64,
    pub certified: Option<bool>,
    pub rate_fit: Option<f64>,
    pub diverged: bool,
    pub error: Option<String>,
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("k,certified,rate_fit,diverged,error\n");
    for row in rows {
        let certified = row.certified.map(|b| b.to_string()).unwrap_or_default();
        let rate = row.rate_fit.map(|v| v.to_string()).unwrap_or_default();
        let error = row.error.as_deref().map(csv_escape).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", row.k, certified, rate, row.diverged, error));
    }
    out
}

fn sweep_row(config: &ExperimentConfig, k: f64, k0: Option<f64>) -> SweepRow {
    let certified = k0.map(|k0| k.abs() < k0);
    match run_single(config, k) {
        Err(e) => SweepRow { k, certified, rate_fit: None, diverged: false, error: Some(e.to_string()) },
        Ok(outcome) => {
            if outcome.trajectory.diverged {
                SweepRow { k, certified, rate_fit: None, diverged: true, error: None }
            } else {
                match fit_from_config(config, &outcome.system, &outcome.trajectory) {
                    Ok(fit) => SweepRow {
                        k,
                        certified,
                        rate_fit: Some(fit.rate_fit),
                        diverged: false,
                        error: None,
                    },
                    Err(e) => SweepRow {
                        k,
                        certified,
                        rate_fit: None,
                        diverged: false,
                        error: Some(e.to_string()),
                    },
                }
            }
        }
    }
}

/// One summary row per gain, computed concurrently, emitted sorted by gain.
/// Row-level failures land in the error column; the sweep itself succeeds.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<u8, CliError> {
    let mut ks = config.k.values();
    if ks.is_empty() {
        return Err(CliError::config("key k needs a nonempty grid for sweep"));
    }
    ks.sort_by(f64::total_cmp);

    // The threshold does not depend on the gain, so resolve it once.
    let k0 = match &config.certificate {
        None => None,
        Some(spec) => {
            let probe = build_system(&config.model, ks[0])?;
            Some(resolve_certificate(spec, &probe)?.certify(0.0)?.k0)
        }
    };

    let compute = || ks.par_iter().map(|&k| sweep_row(config, k, k0)).collect::<Vec<_>>();
    let rows = match config.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| CliError::config(format!("worker pool: {e}")))?
            .install(compute),
        None => compute(),
    };

    let csv = render_sweep_csv(&rows);
    print!("{csv}");
    if let Some(path) = &config.output.csv {
        write_text(path, &csv)?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
pub struct VerifySummary {
    pub command: &'static str,
    pub model: String,
    pub k: f64,
    pub certified: bool,
    /// pass, violations, not-certified, or diverged.
    pub verdict: &'static str,
    pub certificate: StabilityCertificate<f64>,
    pub report: Option<BoundReport<f64>>,
}

/// Simulate and check the trajectory against the certified envelope.
pub fn cmd_verify_bounds(config: &ExperimentConfig, tol: f64) -> Result<u8, CliError> {
    let spec = config
        .certificate
        .as_ref()
        .ok_or_else(|| CliError::config("key certificate is required for verify-bounds"))?;
    let k = config.k.single().map_err(CliError::Config)?;
    let outcome = run_single(config, k)?;
    let cert = resolve_certificate(spec, &outcome.system)?.certify(k)?;

    let (verdict, report, code) = if !cert.stable {
        ("not-certified", None, EXIT_NOT_CERTIFIED)
    } else if outcome.trajectory.diverged {
        ("diverged", None, EXIT_DIVERGED)
    } else {
        let alpha = history_weight_alpha(
            &outcome.history,
            cert.omega,
            Some(&outcome.system.output_weights),
        )?;
        let u0_norm = outcome.system.state_norm(&outcome.u0);
        let report = verify_iterative_bound(&outcome.trajectory, &cert, u0_norm, alpha, tol)?;
        if report.passed() {
            ("pass", Some(report), EXIT_OK)
        } else {
            ("violations", Some(report), EXIT_NOT_CERTIFIED)
        }
    };

    let summary = VerifySummary {
        command: "verify-bounds",
        model: config.model.label(),
        k,
        certified: cert.stable,
        verdict,
        certificate: cert,
        report,
    };
    let text = format!("{}\n", serde_json::to_string_pretty(&summary)?);
    print!("{text}");
    if let Some(path) = &config.output.summary {
        write_text(path, &text)?;
    }
    Ok(code)
}

/// Scan the reflection coefficient; optionally dump the sampled curve.
pub fn cmd_scan_reflection(
    a: f64,
    xi_max: f64,
    step: f64,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<u8, CliError> {
    let scan = reflection_scan(a, xi_max, step)?;
    let text = format!("{}\n", serde_json::to_string_pretty(&scan)?);
    print!("{text}");
    if let Some(path) = out {
        write_text(path, &text)?;
    }
    if let Some(path) = csv {
        let mut body = String::from("xi,re,im,abs\n");
        for i in 0..scan.points {
            let xi = -scan.xi_max + scan.step * i as f64;
            let c = reflection_coefficient(xi, a)?;
            body.push_str(&format!("{},{},{},{}\n", xi, c.re, c.im, c.norm()));
        }
        write_text(path, &body)?;
    }
    Ok(EXIT_OK)
}
