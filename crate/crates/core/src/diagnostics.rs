//! Measurement instruments for the toolkit's claims: semigroup-constant
//! estimation, observation and control-map norms, discrete energy
//! functionals, decay-rate fitting, envelope verification, the boundary
//! reflection scan, and eigenmode extraction.
//!
//! Everything here is an *estimator* or a *check*: nothing in this module
//! feeds back into the solvers, so a bug cannot silently improve the
//! quantities it is supposed to audit. Estimators report per-mesh values
//! together with the grid they were computed on; refinement self-consistency
//! is the intended way to judge how close they are to their continuum
//! counterparts.

use nalgebra::{Cholesky, Complex, ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certificates::{
    envelope_params, interval_envelope, EnvelopeParams, SemigroupEstimate, StabilityCertificate,
};
use crate::error::{Error, Result};
use crate::history::History;
use crate::linalg::{expm, sigma_max_op, sigma_max_power, spectral_abscissa, GramFactor};
use crate::models::g_value;
use crate::scalar::{real, real_of, Scalar};
use crate::system::{DelaySystem, Nonlinearity};
use crate::trajectory::Trajectory;

/// Octave count of the geometric time grid used when sampling
/// `norm(exp(tA)) * exp(omega t)`: the grid spans `(t_max * 2^-16, t_max]`,
/// which is "all of `(0, t_max]`" at the tolerances involved because the
/// sampled function tends to 1 as `t -> 0`. Each squaring of the chain
/// doubles the seed's rounding error, so the octave count also caps the
/// scheme's relative error at about `2^16 eps`.
const SUP_OCTAVES: usize = 16;

/// Estimates `(M, omega)` with `norm(exp(tA)) <= M exp(-omega t)` for an
/// exponentially stable generator.
///
/// `omega` concedes `margin` of the spectral abscissa, which keeps `M`
/// finite and modest for non-normal `A`; `margin = 0` is allowed and exact
/// for normal matrices. `M` is the sampled supremum of
/// `norm(exp(tA)) * exp(omega t)` over a geometric grid of roughly `samples`
/// points in `(0, t_max]`, clamped to at least 1, with norms taken in the
/// geometry of `gram` when given. The grid is walked by repeated squaring of
/// a small-time exponential, so the cost is one dense multiply per sample
/// rather than one full exponential per sample.
pub fn estimate_semigroup_constants<T: Scalar>(
    a: &DMatrix<T>,
    gram: Option<&GramFactor<T>>,
    t_max: T,
    samples: usize,
    margin: T,
) -> Result<SemigroupEstimate<T>> {
    if !(t_max > T::zero()) || !t_max.is_finite() {
        return Err(Error::config("estimation horizon t_max must be strictly positive and finite"));
    }
    if samples < 2 {
        return Err(Error::config("semigroup estimation needs at least 2 samples"));
    }
    if !(margin >= T::zero() && margin < T::one()) {
        return Err(Error::domain("semigroup margin must lie in [0, 1)"));
    }
    let abscissa = spectral_abscissa(a)?;
    if !(abscissa < T::zero()) {
        return Err(Error::domain(format!(
            "generator is not exponentially stable: spectral abscissa {abscissa:e} is nonnegative"
        )));
    }
    let omega = (T::one() - margin) * (-abscissa);

    // Conjugating the generator once moves the whole computation into the
    // energy geometry: exp(t R A R^-1) = R exp(tA) R^-1.
    let ac = match gram {
        None => a.clone(),
        Some(f) => &f.sqrt * a * &f.inv_sqrt,
    };

    let subs = samples.div_ceil(SUP_OCTAVES).max(1);
    let tol = T::default_epsilon() * real(16.0);
    let mut sup = T::zero();
    for p in 1..=subs {
        let expo = real::<T>(p as f64 / subs as f64 - SUP_OCTAVES as f64);
        let t_seed = t_max * real::<T>(2.0).powf(expo);
        let mut e = expm(&(&ac * t_seed));
        let mut t = t_seed;
        for q in 0..SUP_OCTAVES {
            let sigma = sigma_max_power(&e, 4000, tol);
            if sigma > T::zero() {
                // exp(ln sigma + omega t) avoids overflow when the two
                // factors are individually extreme but their product is not.
                let val = (sigma.ln() + omega * t).exp();
                if val > sup {
                    sup = val;
                }
            }
            if q + 1 < SUP_OCTAVES {
                e = &e * &e;
                t = t + t;
            }
        }
    }
    SemigroupEstimate::new(sup.max(T::one()), omega, margin)
}

/// [`estimate_semigroup_constants`] for a system's generator in its own
/// state geometry.
pub fn estimate_semigroup_for<T: Scalar>(
    system: &DelaySystem<T>,
    t_max: T,
    samples: usize,
    margin: T,
) -> Result<SemigroupEstimate<T>> {
    let factor = system.gram_factor()?;
    estimate_semigroup_constants(&system.a, factor.as_ref(), t_max, samples, margin)
}

/// Smallest constant in `norm(Bstar u)^2 <= mu * norm(Cstar u)^2`, or
/// [`Mu::Infinite`] when no such constant exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mu<T> {
    Finite(T),
    Infinite,
}

impl<T: Copy> Mu<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Mu::Finite(_))
    }

    pub fn value(&self) -> Option<T> {
        match self {
            Mu::Finite(v) => Some(*v),
            Mu::Infinite => None,
        }
    }
}

/// Largest generalized Rayleigh quotient of `(Bstar^T Bstar, Cstar^T Cstar)`
/// on the complement of `Cstar`'s null space.
///
/// When some null vector of `Cstar` is visible to `Bstar` the quotient is
/// unbounded and the result is [`Mu::Infinite`]; that is a report, not an
/// error. The factorization goes through the symmetric eigendecomposition of
/// `Cstar^T Cstar`, with rank decided at `n * eps` relative to the largest
/// eigenvalue.
pub fn estimate_mu<T: Scalar>(bstar: &DMatrix<T>, cstar: &DMatrix<T>) -> Result<Mu<T>> {
    let n = bstar.ncols();
    if cstar.ncols() != n || n == 0 {
        return Err(Error::domain(
            "estimate_mu needs two observation maps over the same nonempty state space",
        ));
    }
    let bscale = bstar.amax();
    if bscale == T::zero() {
        return Ok(Mu::Finite(T::zero()));
    }

    let h = cstar.transpose() * cstar;
    let eig = nalgebra::SymmetricEigen::new(h);
    let lam_max = eig.eigenvalues.max();
    if !(lam_max > T::zero()) {
        // Cstar = 0 while Bstar != 0.
        return Ok(Mu::Infinite);
    }
    let rank_tol = lam_max * real_of::<T>(n) * T::default_epsilon() * real(64.0);
    // Null-space leakage: any null direction of Cstar that Bstar can see
    // makes the quotient unbounded.
    let leak_tol = bscale * real_of::<T>(n) * T::default_epsilon() * real(1e3);
    let mut range: Vec<(T, usize)> = Vec::new();
    for i in 0..eig.eigenvalues.len() {
        let lam = eig.eigenvalues[i];
        if lam > rank_tol {
            range.push((lam, i));
        } else {
            let dir = eig.eigenvectors.column(i);
            if (bstar * dir).norm() > leak_tol {
                return Ok(Mu::Infinite);
            }
        }
    }
    // mu = sigma_max(Bstar V_r Lambda_r^{-1/2})^2 on the retained range.
    let mut probe = DMatrix::<T>::zeros(bstar.nrows(), range.len());
    for (col, (lam, i)) in range.iter().enumerate() {
        let scaled = (bstar * eig.eigenvectors.column(*i)) / lam.sqrt();
        probe.column_mut(col).copy_from(&scaled);
    }
    let sigma = crate::linalg::op_norm(&probe);
    Ok(Mu::Finite(sigma * sigma))
}

/// Discrete operator norms of the control and observation maps over one
/// delay length, reported per-mesh.
///
/// `c1` bounds the state reached by driving the delayed channel, `c2` the
/// channel observation of the free evolution, and `c3` their composition;
/// all in the system's state and channel geometries with trapezoid time
/// quadrature on `m` steps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdmissibilityEstimate<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    /// Time-grid steps over the horizon.
    pub m: usize,
    /// Estimation horizon, equal to the system's delay.
    pub horizon: T,
}

/// Estimates the admissibility constants of a linear system on an `m`-step
/// grid over `[0, tau]`.
///
/// The three maps are assembled from the one-step exponential: `c1` and `c2`
/// by accumulating their `dim x dim` Gram matrices, `c3` matrix-free by
/// power iteration on the triangular composition, whose dense form has
/// `(m+1)^2` channel blocks and is never materialized.
pub fn estimate_admissibility<T: Scalar>(
    system: &DelaySystem<T>,
    m: usize,
) -> Result<AdmissibilityEstimate<T>> {
    if system.nonlinearity.is_some() {
        return Err(Error::domain(
            "admissibility constants are defined for the linear part only; got a semilinear model",
        ));
    }
    if m < 8 {
        return Err(Error::config("admissibility grid needs at least 8 steps"));
    }
    let n = system.dim();
    let p = system.channel_dim();
    let tau = system.tau;
    let delta = tau / real_of::<T>(m);
    let half = real::<T>(0.5);
    let gf = system.gram_factor()?;

    let e = expm(&(&system.a * delta));
    let es = match &gf {
        None => e,
        Some(f) => &f.sqrt * e * &f.inv_sqrt,
    };
    let es_t = es.transpose();

    // Absorb the state and channel geometries into the maps once, so every
    // norm below is a plain Euclidean norm.
    let mut bs = system.input_map.clone();
    if let Some(f) = &gf {
        bs = &f.sqrt * bs;
    }
    let mut cs = system.output_map.clone();
    if let Some(f) = &gf {
        cs *= &f.inv_sqrt;
    }
    for j in 0..p {
        let root = system.output_weights[j].sqrt();
        bs.column_mut(j).apply(|v| *v /= root);
        cs.row_mut(j).apply(|v| *v *= root);
    }
    let bs_t = bs.transpose();
    let cs_t = cs.transpose();

    let w = |j: usize| if j == 0 || j == m { delta * half } else { delta };
    let pow_tol = T::default_epsilon() * real(16.0);

    // c1: Gram accumulation of the columns sqrt(w_j) * Es^{m-j} Bs.
    let mut k1 = DMatrix::<T>::zeros(n, n);
    let mut reach = bs.clone();
    for j in (0..=m).rev() {
        k1 += (&reach * reach.transpose()) * w(j);
        if j > 0 {
            reach = &es * reach;
        }
    }
    let c1 = sigma_max_power(&k1, 4000, pow_tol).max(T::zero()).sqrt();

    // c2: Gram accumulation of the rows sqrt(w_j) * Cs Es^j.
    let mut k2 = DMatrix::<T>::zeros(n, n);
    let mut obs = cs.clone();
    for j in 0..=m {
        k2 += (obs.transpose() * &obs) * w(j);
        if j < m {
            obs *= &es;
        }
    }
    let c2 = sigma_max_power(&k2, 4000, pow_tol).max(T::zero()).sqrt();

    // c3: the row-j block observes the trapezoid composition
    // delta * (sum_{i<=j} Es^{j-i} x_i - half the i=0 and i=j terms),
    // with x_i the channel input at grid node i.
    let sqw: Vec<T> = (0..=m).map(|j| w(j).sqrt()).collect();
    let dim_flat = (m + 1) * p;
    let apply = |v: &DVector<T>| -> DVector<T> {
        let mut out = DVector::<T>::zeros(dim_flat);
        let mut psum = DVector::<T>::zeros(n);
        let mut first = DVector::<T>::zeros(n);
        for (j, &sw) in sqw.iter().enumerate() {
            let xj = &bs * (v.rows(j * p, p) / sw);
            if j == 0 {
                psum.copy_from(&xj);
                first.copy_from(&xj);
            } else {
                psum = &es * &psum + &xj;
                first = &es * &first;
                let phi = (&psum - &first * half - &xj * half) * delta;
                let yj = (&cs * phi) * sw;
                out.rows_mut(j * p, p).copy_from(&yj);
            }
        }
        out
    };
    let apply_t = |y: &DVector<T>| -> DVector<T> {
        let mut out = DVector::<T>::zeros(dim_flat);
        let mut tail = DVector::<T>::zeros(n);
        for i in (1..=m).rev() {
            let ci = &cs_t * (y.rows(i * p, p) * sqw[i]);
            tail = if i == m { ci.clone() } else { &ci + &es_t * &tail };
            let si = (&tail - &ci * half) * delta;
            let vi = (&bs_t * si) / sqw[i];
            out.rows_mut(i * p, p).copy_from(&vi);
        }
        let s0 = (&es_t * &tail) * (delta * half);
        let v0 = (&bs_t * s0) / sqw[0];
        out.rows_mut(0, p).copy_from(&v0);
        out
    };
    let c3 = sigma_max_op(dim_flat, apply, apply_t, 600, real(1e-10));

    Ok(AdmissibilityEstimate { c1, c2, c3, m, horizon: tau })
}

fn state_quad<T: Scalar>(system: &DelaySystem<T>, v: &DVector<T>) -> T {
    match &system.gram {
        None => v.norm_squared(),
        Some(g) => v.dot(&(g * v)).max(T::zero()),
    }
}

fn channel_quad<T: Scalar>(system: &DelaySystem<T>, y: &DVector<T>) -> T {
    let mut acc = T::zero();
    for (i, yi) in y.iter().enumerate() {
        acc += system.output_weights[i] * *yi * *yi;
    }
    acc.max(T::zero())
}

/// Potential term of the energy; zero for linear models. The spatial
/// quadrature weights are the diagonal of the velocity block of the Gram
/// matrix, which is the discrete volume measure for every catalog model.
fn potential_term<T: Scalar>(system: &DelaySystem<T>, state: &DVector<T>) -> Result<T> {
    let Some(Nonlinearity::PowerWave { beta }) = &system.nonlinearity else {
        return Ok(T::zero());
    };
    let split = system
        .velocity_split
        .ok_or_else(|| Error::domain("semilinear energy needs a velocity split"))?;
    if state.len() != 2 * split {
        return Err(Error::domain(
            "potential term needs displacement and velocity blocks of equal length",
        ));
    }
    let weights = match &system.gram {
        Some(g) => DVector::from_fn(split, |i, _| g[(split + i, split + i)]),
        None => DVector::from_element(split, T::one()),
    };
    let u = state.rows(0, split).into_owned();
    Ok(g_value(&u, *beta, &weights))
}

/// Trailing-window contribution `0.5 |k| int_{t-tau}^t norm(channel)^2`,
/// by composite trapezoid over uniformly spaced samples spanning the window.
fn window_term<T: Scalar>(system: &DelaySystem<T>, window: &[DVector<T>]) -> Result<T> {
    if system.k == T::zero() {
        return Ok(T::zero());
    }
    if window.len() < 2 {
        return Err(Error::domain(
            "energy needs at least two trailing channel samples spanning the delay window",
        ));
    }
    let p = system.channel_dim();
    for y in window {
        if y.len() != p {
            return Err(Error::domain(format!(
                "trailing window sample has {} components, channel has {}",
                y.len(),
                p
            )));
        }
    }
    let step = system.tau / real_of::<T>(window.len() - 1);
    let half = real::<T>(0.5);
    let mut acc = half * channel_quad(system, &window[0]);
    for y in &window[1..window.len() - 1] {
        acc += channel_quad(system, y);
    }
    acc += half * channel_quad(system, &window[window.len() - 1]);
    Ok(half * system.k.abs() * acc * step)
}

/// Energy of a state: half the squared state norm, minus the potential for
/// semilinear models, plus the weighted trailing-window integral of the
/// delayed channel.
///
/// `window` holds uniformly spaced samples of the channel observation over
/// the last delay length, oldest first; it may be empty only when `k = 0`.
pub fn energy<T: Scalar>(
    system: &DelaySystem<T>,
    state: &DVector<T>,
    window: &[DVector<T>],
) -> Result<T> {
    if state.len() != system.dim() {
        return Err(Error::domain(format!(
            "state has {} entries, system has dimension {}",
            state.len(),
            system.dim()
        )));
    }
    let half = real::<T>(0.5);
    Ok(half * state_quad(system, state) - potential_term(system, state)?
        + window_term(system, window)?)
}

/// Energy at every recorded sample of a trajectory.
///
/// Requires `record_every = 1` so the trailing window can be reconstructed
/// exactly; for `t < tau` the window reaches into the prescribed history,
/// which is the window's initial contribution. The sliding trapezoid makes
/// the whole series linear in the trajectory length.
pub fn energy_series<T: Scalar>(
    system: &DelaySystem<T>,
    traj: &Trajectory<T>,
    history: &History<T>,
) -> Result<Vec<T>> {
    if traj.record_every != 1 {
        return Err(Error::config(
            "energy series needs every solver step recorded (record_every = 1)",
        ));
    }
    if traj.is_empty() {
        return Ok(Vec::new());
    }
    let p = system.channel_dim();
    if history.channel_dim() != p {
        return Err(Error::domain("history channel width does not match the system"));
    }
    let m = history.m();
    let tau = system.tau;
    let align_tol = tau * T::default_epsilon() * real(32.0);
    if (history.tau() - tau).abs() > align_tol {
        return Err(Error::domain("history delay length does not match the system"));
    }
    if (real_of::<T>(m) * traj.dt - tau).abs() > align_tol {
        return Err(Error::config(
            "trajectory step does not divide the delay; energy windows would straddle samples",
        ));
    }
    if traj.outputs.len() != traj.len() {
        return Err(Error::domain("trajectory is missing recorded channel outputs"));
    }

    let len = traj.len();
    // Squared channel norms on the combined grid: entry i is solver step
    // i - m, so the first m entries come from the history.
    let mut sq = Vec::with_capacity(m + len);
    for j in 0..m {
        sq.push(channel_quad(system, history.sample(j)));
    }
    for y in &traj.outputs {
        sq.push(channel_quad(system, y));
    }

    let half = real::<T>(0.5);
    let step = tau / real_of::<T>(m);
    let weight = half * system.k.abs() * step;
    // Interior sum of the first window (combined indices 1..m-1).
    let mut interior = T::zero();
    for v in &sq[1..m] {
        interior += *v;
    }
    let mut out = Vec::with_capacity(len);
    for n in 0..len {
        let integral = half * sq[n] + interior + half * sq[n + m];
        let e = half * state_quad(system, &traj.states[n]) - potential_term(system, &traj.states[n])?
            + weight * integral;
        out.push(e);
        if n + 1 < len {
            interior += sq[n + m] - sq[n + 1];
        }
    }
    Ok(out)
}

/// Indices `n` for which the step `t_n -> t_{n+1}` increased the energy by
/// more than `tol`. Empty means the sequence is non-increasing up to `tol`.
pub fn energy_monotone_check<T: Scalar>(energies: &[T], tol: T) -> Vec<usize> {
    let mut out = Vec::new();
    for n in 0..energies.len().saturating_sub(1) {
        if energies[n + 1] > energies[n] + tol {
            out.push(n);
        }
    }
    out
}

/// Which recorded series a decay fit consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitSource {
    Norm,
    Energy,
}

/// Least-squares exponential fit `value ~ m_fit * exp(-rate_fit * t)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit<T> {
    /// Prefactor, `exp` of the fitted intercept.
    pub m_fit: T,
    /// Fitted decay rate; positive means the signal decays.
    pub rate_fit: T,
    /// RMS residual of the fit in log space.
    pub residual: T,
    /// Time window the fit was taken over.
    pub window: (T, T),
    /// Number of interval maxima entering the regression.
    pub points: usize,
}

/// Fits `log(value)` against time over `[window.0, window.1]`, one point per
/// length-`interval` bucket.
///
/// Each bucket contributes its maximum value at the time it was attained;
/// oscillating signals are thereby reduced to their envelope peaks, which is
/// what exponential bounds constrain. Values selected by the window must be
/// strictly positive.
pub fn fit_log_linear<T: Scalar>(
    times: &[T],
    values: &[T],
    window: (T, T),
    interval: T,
) -> Result<DecayFit<T>> {
    if times.len() != values.len() {
        return Err(Error::domain("times and values must have equal length"));
    }
    if !(interval > T::zero()) || !interval.is_finite() {
        return Err(Error::domain("bucket interval must be strictly positive and finite"));
    }
    if !(window.0 < window.1) || !window.0.is_finite() || !window.1.is_finite() {
        return Err(Error::domain("fit window must be a nonempty finite interval"));
    }
    let slack = interval * T::default_epsilon() * real(64.0);
    // Per-bucket running maximum with the time it occurred.
    let mut buckets: std::collections::BTreeMap<u64, (T, T)> = std::collections::BTreeMap::new();
    for (&t, &v) in times.iter().zip(values.iter()) {
        if t < window.0 - slack || t > window.1 + slack {
            continue;
        }
        if !(v > T::zero()) {
            return Err(Error::domain(
                "decay fit needs strictly positive values inside the window",
            ));
        }
        let b = ((t - window.0) / interval)
            .floor()
            .to_u64()
            .unwrap_or(0);
        match buckets.get_mut(&b) {
            Some(entry) if v <= entry.1 => {}
            Some(entry) => *entry = (t, v),
            None => {
                buckets.insert(b, (t, v));
            }
        }
    }
    if buckets.len() < 2 {
        return Err(Error::domain(
            "fit window must cover at least two delay intervals containing samples",
        ));
    }
    let pts: Vec<(T, T)> = buckets.values().map(|&(t, v)| (t, v.ln())).collect();
    let count = real_of::<T>(pts.len());
    let mut tbar = T::zero();
    let mut ybar = T::zero();
    for &(t, y) in &pts {
        tbar += t;
        ybar += y;
    }
    tbar /= count;
    ybar /= count;
    let mut stt = T::zero();
    let mut sty = T::zero();
    for &(t, y) in &pts {
        stt += (t - tbar) * (t - tbar);
        sty += (t - tbar) * (y - ybar);
    }
    if !(stt > T::zero()) {
        return Err(Error::domain("fit needs samples at distinct times"));
    }
    let slope = sty / stt;
    let intercept = ybar - slope * tbar;
    let mut rss = T::zero();
    for &(t, y) in &pts {
        let r = y - (intercept + slope * t);
        rss += r * r;
    }
    Ok(DecayFit {
        m_fit: intercept.exp(),
        rate_fit: -slope,
        residual: (rss / count).sqrt(),
        window,
        points: pts.len(),
    })
}

/// [`fit_log_linear`] on a trajectory's recorded norms or energies, with
/// `interval` the bucket length (normally the delay).
pub fn fit_decay_rate<T: Scalar>(
    traj: &Trajectory<T>,
    window: (T, T),
    interval: T,
    source: FitSource,
) -> Result<DecayFit<T>> {
    if traj.is_empty() {
        return Err(Error::domain("cannot fit an empty trajectory"));
    }
    let t0 = traj.times[0];
    let t1 = *traj.times.last().expect("nonempty");
    let edge = traj.dt * real::<T>(0.5);
    if window.0 < t0 - edge || window.1 > t1 + edge {
        return Err(Error::domain(format!(
            "fit window [{}, {}] exceeds the recorded span [{}, {}]",
            window.0, window.1, t0, t1
        )));
    }
    match source {
        FitSource::Norm => fit_log_linear(&traj.times, &traj.norms, window, interval),
        FitSource::Energy => {
            let energies = traj
                .energies
                .as_ref()
                .ok_or_else(|| Error::domain("trajectory has no attached energy series"))?;
            fit_log_linear(&traj.times, energies, window, interval)
        }
    }
}

/// Outcome of checking a trajectory against a certificate's staircase
/// envelope.
///
/// The bound is only meaningful when the certificate's `(M, omega)` are
/// valid semigroup constants for the model that produced the trajectory;
/// the report carries them so a reader can audit that premise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport<T> {
    /// Number of samples compared.
    pub checked: usize,
    /// Sample indices where the measured norm exceeded the envelope by more
    /// than `tol`.
    pub violations: Vec<usize>,
    /// Smallest envelope-minus-measured gap over all samples; negative
    /// exactly when some sample exceeded the envelope.
    pub worst_slack: T,
    /// Largest measured/envelope ratio.
    pub max_ratio: T,
    /// Comparison tolerance the verdict used.
    pub tol: T,
    /// Semigroup constants the envelope is built on.
    pub semigroup: SemigroupEstimate<T>,
    /// Smooth-envelope parameters (the staircase sharpens these).
    pub envelope: EnvelopeParams<T>,
}

impl<T> BoundReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every recorded sample against the interval-indexed envelope
/// implied by `cert` for initial norm `u0_norm` and history weight `alpha`.
pub fn verify_iterative_bound<T: Scalar>(
    traj: &Trajectory<T>,
    cert: &StabilityCertificate<T>,
    u0_norm: T,
    alpha: T,
    tol: T,
) -> Result<BoundReport<T>> {
    if traj.is_empty() {
        return Err(Error::domain("cannot verify an empty trajectory"));
    }
    if !(tol >= T::zero()) {
        return Err(Error::domain("verification tolerance must be nonnegative"));
    }
    let mut violations = Vec::new();
    let mut worst_slack = T::max_value().unwrap_or_else(T::one);
    let mut max_ratio = T::zero();
    for i in 0..traj.len() {
        let bound = interval_envelope(cert, u0_norm, alpha, traj.times[i])?;
        let measured = traj.norms[i];
        let slack = bound - measured;
        if slack < worst_slack {
            worst_slack = slack;
        }
        if bound > T::zero() {
            let ratio = measured / bound;
            if ratio > max_ratio {
                max_ratio = ratio;
            }
        }
        if measured > bound + tol {
            violations.push(i);
        }
    }
    Ok(BoundReport {
        checked: traj.len(),
        violations,
        worst_slack,
        max_ratio,
        tol,
        semigroup: SemigroupEstimate::new(cert.m, cert.omega, T::zero())?,
        envelope: envelope_params(cert, u0_norm, alpha)?,
    })
}

fn reflection_parts<T: Scalar>(xi: T, a: T) -> (Complex<T>, Complex<T>) {
    let (sin, cos) = (xi.sin(), xi.cos());
    let num = Complex::new(a * cos, -(a * sin));
    let den = Complex::new(xi * sin - a * cos, -(xi * cos));
    (num, den)
}

/// Reflection coefficient `a e^{-i xi} / (xi sin xi - (a + i xi) cos xi)` of
/// the boundary-stiffness model at real frequency `xi`.
///
/// At `xi = 0` the denominator is `-a`, so `c(0) = -1`; the denominator has
/// no real zero for `a > 0`, which [`reflection_scan`] evidences by
/// reporting the smallest modulus it saw.
pub fn reflection_coefficient<T: Scalar>(xi: T, a: T) -> Result<Complex<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::domain("boundary stiffness a must be strictly positive and finite"));
    }
    if !xi.is_finite() {
        return Err(Error::domain("frequency must be finite"));
    }
    let (num, den) = reflection_parts(xi, a);
    Ok(num / den)
}

/// Summary of a symmetric grid scan of `|c(xi)|`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReflectionScan<T> {
    pub a: T,
    pub xi_max: T,
    pub step: T,
    /// Largest modulus seen on the grid.
    pub sup_abs: T,
    /// Frequency where the largest modulus occurred.
    pub argmax: T,
    /// Smallest denominator modulus seen (staying away from zero is what
    /// makes the supremum meaningful).
    pub min_denom: T,
    pub min_denom_at: T,
    /// Number of grid points evaluated.
    pub points: usize,
}

/// Scans `|c(xi)|` over `xi in [-xi_max, xi_max]` with the given step.
pub fn reflection_scan<T: Scalar>(a: T, xi_max: T, step: T) -> Result<ReflectionScan<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::domain("boundary stiffness a must be strictly positive and finite"));
    }
    if !(xi_max > T::zero()) || !xi_max.is_finite() {
        return Err(Error::domain("scan range must be strictly positive and finite"));
    }
    if !(step > T::zero()) || step > xi_max {
        return Err(Error::domain("scan step must lie in (0, xi_max]"));
    }
    let count = ((xi_max + xi_max) / step)
        .floor()
        .to_usize()
        .ok_or_else(|| Error::config("scan grid is too fine; it would overflow an index"))?;
    let points = count + 1;
    let mut sup_abs = T::zero();
    let mut argmax = -xi_max;
    let mut min_denom = T::max_value().unwrap_or_else(T::one);
    let mut min_denom_at = -xi_max;
    for i in 0..points {
        let xi = -xi_max + step * real_of::<T>(i);
        let (num, den) = reflection_parts(xi, a);
        let dmod = den.re.hypot(den.im);
        let cmod = num.re.hypot(num.im) / dmod;
        if cmod > sup_abs {
            sup_abs = cmod;
            argmax = xi;
        }
        if dmod < min_denom {
            min_denom = dmod;
            min_denom_at = xi;
        }
    }
    Ok(ReflectionScan { a, xi_max, step, sup_abs, argmax, min_denom, min_denom_at, points })
}

/// Per-mesh constants of the local Lipschitz majorant
/// `psi(s) = c_inf^beta * c_l2 * s^beta` used by the smallness radius.
///
/// `c_inf` bounds nodal values by the stiffness seminorm (the discrete
/// sup-embedding), `c_l2` bounds the volume norm by the stiffness seminorm
/// (the discrete Poincare constant). Both are exact finite-dimensional
/// quantities of the model's Gram blocks; how they enter `psi` is an
/// implementation choice of this toolkit, recorded here rather than hidden.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PsiConstants<T> {
    pub c_inf: T,
    pub c_l2: T,
    pub beta: T,
}

impl<T: Scalar> PsiConstants<T> {
    /// Coefficient of the majorant.
    pub fn c_psi(&self) -> T {
        self.c_inf.powf(self.beta) * self.c_l2
    }

    /// `psi(s)` itself.
    pub fn psi(&self, s: T) -> T {
        self.c_psi() * s.powf(self.beta)
    }

    /// Inverse of the majorant; defined for strictly positive arguments.
    pub fn psi_inv(&self, y: T) -> Result<T> {
        if !(y > T::zero()) || !y.is_finite() {
            return Err(Error::domain("psi_inv needs a strictly positive finite argument"));
        }
        Ok((y / self.c_psi()).powf(T::one() / self.beta))
    }
}

/// Extracts the embedding constants of a semilinear model from the blocks
/// of its Gram matrix.
pub fn psi_embedding<T: Scalar>(system: &DelaySystem<T>) -> Result<PsiConstants<T>> {
    let Some(Nonlinearity::PowerWave { beta }) = &system.nonlinearity else {
        return Err(Error::domain("embedding constants apply to semilinear models only"));
    };
    let split = system
        .velocity_split
        .ok_or_else(|| Error::domain("semilinear model must declare a velocity split"))?;
    if system.dim() != 2 * split {
        return Err(Error::domain(
            "embedding constants need displacement and velocity blocks of equal length",
        ));
    }
    let gram = system
        .gram
        .as_ref()
        .ok_or_else(|| Error::domain("embedding constants need the model's energy Gram matrix"))?;
    let stiff = gram.view((0, 0), (split, split)).into_owned();
    let mass = gram.view((split, split), (split, split)).into_owned();
    let chol = Cholesky::new(stiff)
        .ok_or_else(|| Error::linalg("stiffness block is not positive definite"))?;
    let inv = chol.inverse();
    let mut c_inf_sq = T::zero();
    for i in 0..split {
        if inv[(i, i)] > c_inf_sq {
            c_inf_sq = inv[(i, i)];
        }
    }
    // lambda_max of K^{-1} M through the symmetric congruence
    // M^{1/2} K^{-1} M^{1/2}.
    let mass_factor = GramFactor::new(&mass)?;
    let w = &mass_factor.sqrt * chol.solve(&mass_factor.sqrt);
    let c_l2_sq = sigma_max_power(&w, 4000, T::default_epsilon() * real(16.0));
    Ok(PsiConstants { c_inf: c_inf_sq.sqrt(), c_l2: c_l2_sq.sqrt(), beta: *beta })
}

/// Smallness radius for semilinear runs:
/// `min( psi_inv(1/4) / 2, psi_inv(omega' / tilde_m) / (2 sqrt 2) )`.
///
/// The second term exists only when a certified closed-loop rate is
/// available, i.e. `decay = Some((omega_prime, tilde_m))` with
/// `omega_prime > 0`; a nonpositive rate certifies nothing and the first
/// term alone is returned.
pub fn smallness_radius<T: Scalar>(psi: &PsiConstants<T>, decay: Option<(T, T)>) -> Result<T> {
    let half = real::<T>(0.5);
    let mut rho = half * psi.psi_inv(real(0.25))?;
    if let Some((omega_prime, tilde_m)) = decay {
        if !(tilde_m >= T::one()) {
            return Err(Error::domain("amplification constant must be at least 1"));
        }
        if omega_prime > T::zero() {
            let second = psi.psi_inv(omega_prime / tilde_m)? / (real::<T>(2.0) * real::<T>(2.0).sqrt());
            if second < rho {
                rho = second;
            }
        }
    }
    Ok(rho)
}

/// Eigenvalue with the largest real part, with refined right and left
/// eigenvectors.
///
/// `right` satisfies `A v = lambda v` and `left` satisfies
/// `A^T w = lambda w` (transpose, not adjoint), so the bilinear pairing
/// `w^T exp(tA) v = e^{lambda t} w^T v` projects any trajectory of the free
/// dynamics onto a clean single-mode exponential. Both vectors have unit
/// norm with their largest entry rotated to the positive real axis.
#[derive(Debug, Clone)]
pub struct ModeEstimate<T: Scalar> {
    pub lambda: Complex<T>,
    pub right: DVector<Complex<T>>,
    pub left: DVector<Complex<T>>,
    /// Largest of the two eigen-residual norms `|A v - lambda v|`.
    pub residual: T,
}

fn inverse_iterate<T: Scalar>(
    ac: &DMatrix<Complex<T>>,
    shift: Complex<T>,
) -> Result<(Complex<T>, DVector<Complex<T>>, T)> {
    let n = ac.nrows();
    let mut shifted = ac.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    // Deterministic start with no structural zeros or symmetries.
    let mut x = DVector::<Complex<T>>::from_fn(n, |i, _| {
        Complex::new(real((0.7 * (i as f64 + 1.0)).cos()), real((1.3 * i as f64 + 0.5).sin()))
    });
    x = x.unscale(x.norm());
    let mut lambda = shift;
    for _ in 0..64 {
        let y = lu
            .solve(&x)
            .ok_or_else(|| Error::linalg("shifted generator is numerically singular"))?;
        x = y.unscale(y.norm());
        let new = x.dotc(&(ac * &x));
        let delta = (new - lambda).modulus();
        lambda = new;
        if delta <= (T::one() + lambda.modulus()) * T::default_epsilon() * real(16.0) {
            break;
        }
    }
    // Fix the phase so results are reproducible: largest entry real positive.
    let mut best = 0;
    for i in 1..n {
        if x[i].modulus() > x[best].modulus() {
            best = i;
        }
    }
    let pivot = x[best];
    let rotation = pivot.conjugate() / Complex::new(pivot.modulus(), T::zero());
    let x = x.map(|z| z * rotation);
    let residual = (ac * &x - &x * lambda).norm();
    Ok((lambda, x, residual))
}

/// Finds the least-damped eigenmode of a dense generator.
///
/// The eigenvalue comes from the real Schur form; among real-part ties the
/// member with nonnegative imaginary part is taken. The eigenvectors are
/// then sharpened by complex shift-inverted inverse iteration, which also
/// refines the eigenvalue through its Rayleigh quotient.
pub fn least_damped_mode<T: Scalar>(a: &DMatrix<T>) -> Result<ModeEstimate<T>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::domain("least_damped_mode needs a nonempty square matrix"));
    }
    let schur = nalgebra::linalg::Schur::try_new(
        a.clone(),
        T::default_epsilon() * real(64.0),
        100_000,
    )
    .ok_or_else(|| Error::linalg("Schur iteration did not converge"))?;
    let eig = schur.complex_eigenvalues();
    let mut scale = T::zero();
    for z in eig.iter() {
        scale = scale.max(z.modulus());
    }
    let tie = (T::one() + scale) * T::default_epsilon() * real(64.0);
    let mut target = eig[0];
    for z in eig.iter().skip(1) {
        if z.re > target.re + tie || ((z.re - target.re).abs() <= tie && z.im > target.im) {
            target = *z;
        }
    }

    let ac = DMatrix::<Complex<T>>::from_fn(n, n, |i, j| Complex::new(a[(i, j)], T::zero()));
    let at = ac.transpose();
    let mut offset = (T::one() + target.modulus()) * real::<T>(1e-8);
    let mut last_err = None;
    for _ in 0..3 {
        let shift = Complex::new(target.re + offset, target.im);
        match (inverse_iterate(&ac, shift), inverse_iterate(&at, shift)) {
            (Ok((lambda, right, res_r)), Ok((_, left, res_l))) => {
                return Ok(ModeEstimate { lambda, right, left, residual: res_r.max(res_l) });
            }
            (r, l) => {
                last_err = r.err().or(l.err());
                offset *= real(100.0);
            }
        }
    }
    Err(last_err.unwrap_or_else(|| Error::linalg("inverse iteration failed to converge")))
}
