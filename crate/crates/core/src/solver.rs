//! Time integration of delayed systems by three independent routes.
//!
//! * [`solve_method_of_steps`] is the workhorse: on each interval of length
//!   `tau` the delayed term is a known inhomogeneity read from the stored
//!   history (first interval) or from the already-computed trajectory buffer
//!   (later intervals), and the resulting ODE is advanced with a one-step
//!   method.
//! * [`duhamel_oracle`] evaluates the variation-of-constants representation
//!   with dense matrix exponentials and Gauss-Legendre quadrature. It shares
//!   no time-stepping theory with the method of steps, which makes it a
//!   genuine cross-check rather than a reimplementation.
//! * [`solve_transport_augmented`] rewrites the delay as a transport
//!   equation in an auxiliary variable `Z(t, rho) = y(t - rho tau)` carried
//!   on its own grid, then integrates the coupled system with no delayed
//!   reads at all.
//!
//! The time step must divide the delay exactly (`dt = tau / m` with `m` the
//! number of history sub-intervals), so endpoint reads of the delayed signal
//! always hit stored samples. The half-step reads that RK4 and the midpoint
//! rule need between samples use cubic interpolation on the aligned buffer,
//! whose O(dt^4) error matches the integrator's own order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::History;
use crate::linalg::{expm, gauss_legendre_01, lagrange_cubic_weights};
use crate::scalar::{real, real_of, Scalar};
use crate::system::DelaySystem;
use crate::trajectory::Trajectory;

/// Cubic read of the delayed channel signal at fractional buffer index
/// `pos`, with the stencil confined to the seam-free block containing the
/// enclosing panel. Mild solutions have derivative jumps exactly at
/// multiples of `tau`, which map to buffer indices that are multiples of
/// `m`; a cubic straddling such a kink would silently degrade the
/// integrators to second order, so near a seam the stencil goes one-sided
/// instead.
fn read_delayed<T: Scalar>(buffer: &[DVector<T>], pos: T, m: usize) -> DVector<T> {
    let len = buffer.len();
    let anchor = pos.floor().to_usize().unwrap_or(0).min(len - 2);
    let lo = (anchor / m) * m;
    let hi = (lo + m).min(len - 1);
    if hi - lo < 3 {
        let frac = pos - real_of::<T>(anchor);
        return &buffer[anchor] * (T::one() - frac) + &buffer[anchor + 1] * frac;
    }
    let base = (anchor as isize - 1).clamp(lo as isize, hi as isize - 3) as usize;
    let x = pos - real_of::<T>(base);
    let w = lagrange_cubic_weights(x);
    let mut out = &buffer[base] * w[0];
    for i in 1..4 {
        out += &buffer[base + i] * w[i];
    }
    out
}

/// One-step method used inside the method of steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Classical explicit fourth-order Runge-Kutta.
    Rk4,
    /// Implicit midpoint rule; the delayed term stays explicit because it is
    /// a known inhomogeneity on each interval.
    ImplicitMidpoint,
}

/// Step size, horizon, and bookkeeping for a single solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig<T> {
    /// Time step; must equal `tau / m` for the history's `m`.
    pub dt: T,
    /// Final time; snapped to the nearest whole number of steps.
    pub horizon: T,
    pub integrator: Integrator,
    /// Norm threshold beyond which the trajectory is flagged diverged.
    pub blowup_guard: T,
    /// Keep every `record_every`-th step (the initial state is always kept).
    pub record_every: usize,
}

impl<T: Scalar> SolverConfig<T> {
    /// RK4, guard `1e12`, every step recorded.
    pub fn new(dt: T, horizon: T) -> Self {
        SolverConfig {
            dt,
            horizon,
            integrator: Integrator::Rk4,
            blowup_guard: real(1e12),
            record_every: 1,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every;
        self
    }
}

/// Max fixed-point sweeps for the implicit midpoint stage.
const MIDPOINT_MAX_ITER: usize = 64;

fn check_dimensions<T: Scalar>(
    system: &DelaySystem<T>,
    u0: &DVector<T>,
    history: &History<T>,
) -> Result<()> {
    if u0.len() != system.dim() {
        return Err(Error::config(format!(
            "initial state has {} entries but the system dimension is {}",
            u0.len(),
            system.dim()
        )));
    }
    if history.channel_dim() != system.channel_dim() {
        return Err(Error::config(format!(
            "history carries {}-dim channel samples but the system channel is {}-dim",
            history.channel_dim(),
            system.channel_dim()
        )));
    }
    let tau_err = (history.tau() - system.tau).abs();
    if tau_err > system.tau * T::default_epsilon() * real(32.0) {
        return Err(Error::config("history delay does not match the system delay"));
    }
    Ok(())
}

/// Validates `dt == tau / m` to a few ulps and returns the step count that
/// the horizon snaps to.
fn check_alignment<T: Scalar>(tau: T, m: usize, config: &SolverConfig<T>) -> Result<usize> {
    if !(config.dt > T::zero()) || !config.dt.is_finite() {
        return Err(Error::config("time step must be strictly positive and finite"));
    }
    if !(config.horizon > T::zero()) || !config.horizon.is_finite() {
        return Err(Error::config("horizon must be strictly positive and finite"));
    }
    if config.record_every == 0 {
        return Err(Error::config("record_every must be at least 1"));
    }
    if !(config.blowup_guard > T::zero()) {
        return Err(Error::config("blow-up guard must be strictly positive"));
    }
    let implied = (tau / config.dt).round();
    let implied_m = implied
        .to_usize()
        .ok_or_else(|| Error::config("tau / dt does not fit in a sample count"))?;
    if implied_m != m {
        return Err(Error::config(format!(
            "time step implies {implied_m} samples per delay interval but the history stores {m}"
        )));
    }
    let drift = (config.dt * real_of::<T>(m) - tau).abs();
    if drift > tau * T::default_epsilon() * real(32.0) {
        return Err(Error::config(
            "time step does not divide the delay: construct it as dt = tau / m",
        ));
    }
    let steps = (config.horizon / config.dt)
        .round()
        .to_usize()
        .ok_or_else(|| Error::config("horizon / dt does not fit in a step count"))?;
    if steps == 0 {
        return Err(Error::config("horizon shorter than one time step"));
    }
    Ok(steps)
}

fn record_sample<T: Scalar>(
    traj: &mut Trajectory<T>,
    system: &DelaySystem<T>,
    t: T,
    state: &DVector<T>,
) {
    traj.times.push(t);
    traj.norms.push(system.state_norm(state));
    traj.outputs.push(system.output(state));
    traj.states.push(state.clone());
}

fn empty_trajectory<T: Scalar>(dt: T, record_every: usize) -> Trajectory<T> {
    Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        norms: Vec::new(),
        energies: None,
        outputs: Vec::new(),
        dt,
        record_every,
        diverged: false,
    }
}

/// Advances the delayed system interval by interval.
///
/// The channel signal `y(t) = output_map * U(t)` is kept in a single buffer
/// whose index `j` holds the sample at time `(j - m) dt`; the delayed read
/// for the step starting at `t_n` is therefore exactly `buffer[n]`, with no
/// interpolation at stage endpoints. A state whose norm exceeds the guard
/// (or stops being finite) ends the run with the `diverged` flag set; the
/// offending state is not recorded, so the trajectory ends at the last
/// valid time.
pub fn solve_method_of_steps<T: Scalar>(
    system: &DelaySystem<T>,
    u0: &DVector<T>,
    history: &History<T>,
    config: &SolverConfig<T>,
) -> Result<Trajectory<T>> {
    check_dimensions(system, u0, history)?;
    let n_steps = check_alignment(system.tau, history.m(), config)?;
    let dt = config.dt;
    let half = real::<T>(0.5);
    let dim = system.dim();
    let gain_input = &system.input_map * system.k;

    let mut buffer: Vec<DVector<T>> = Vec::with_capacity(history.m() + n_steps + 1);
    buffer.extend_from_slice(history.samples());

    let mut traj = empty_trajectory(dt, config.record_every);
    record_sample(&mut traj, system, T::zero(), u0);

    let rhs = |u: &DVector<T>, y_delayed: &DVector<T>| -> DVector<T> {
        let mut du = &system.a * u;
        du += &gain_input * y_delayed;
        system.add_nonlinear(u, &mut du);
        du
    };

    // (I - dt/2 A) factored once; the midpoint stage solves against it.
    let midpoint_lu = match config.integrator {
        Integrator::Rk4 => None,
        Integrator::ImplicitMidpoint => {
            let lhs = DMatrix::identity(dim, dim) - &system.a * (dt * half);
            Some(lhs.lu())
        }
    };

    let mut u = u0.clone();
    for n in 0..n_steps {
        let u_next = match config.integrator {
            Integrator::Rk4 => {
                let y0 = &buffer[n];
                let y_half = read_delayed(&buffer, real_of::<T>(n) + half, history.m());
                let y1 = &buffer[n + 1];
                let k1 = rhs(&u, y0);
                let k2 = rhs(&(&u + &k1 * (dt * half)), &y_half);
                let k3 = rhs(&(&u + &k2 * (dt * half)), &y_half);
                let k4 = rhs(&(&u + &k3 * dt), y1);
                &u + (k1 + k2 * real::<T>(2.0) + k3 * real::<T>(2.0) + k4) * (dt / real::<T>(6.0))
            }
            Integrator::ImplicitMidpoint => {
                let lu = midpoint_lu.as_ref().expect("factored once above");
                let y_half = read_delayed(&buffer, real_of::<T>(n) + half, history.m());
                let base = &u + &gain_input * &y_half * (dt * half);
                let v = if system.nonlinearity.is_none() {
                    lu.solve(&base).ok_or_else(|| {
                        Error::linalg("midpoint matrix is singular at this time step")
                    })?
                } else {
                    let mut v = u.clone();
                    let tol = T::default_epsilon() * real::<T>(64.0);
                    let mut converged = false;
                    for _ in 0..MIDPOINT_MAX_ITER {
                        let mut fv = DVector::zeros(dim);
                        system.add_nonlinear(&v, &mut fv);
                        let rhs_vec = &base + fv * (dt * half);
                        let v_new = lu.solve(&rhs_vec).ok_or_else(|| {
                            Error::linalg("midpoint matrix is singular at this time step")
                        })?;
                        let delta = (&v_new - &v).norm();
                        v = v_new;
                        if delta <= tol * (T::one() + v.norm()) {
                            converged = true;
                            break;
                        }
                    }
                    if !converged {
                        return Err(Error::linalg(
                            "implicit midpoint fixed point did not converge; reduce dt",
                        ));
                    }
                    v
                };
                v * real::<T>(2.0) - &u
            }
        };

        let nrm = system.state_norm(&u_next);
        if !nrm.is_finite() || nrm > config.blowup_guard {
            traj.diverged = true;
            break;
        }
        u = u_next;
        buffer.push(system.output(&u));
        if (n + 1) % config.record_every == 0 {
            record_sample(&mut traj, system, real_of::<T>(n + 1) * dt, &u);
        }
    }
    Ok(traj)
}

/// Evaluates the variation-of-constants representation of a linear delayed
/// system.
///
/// Per step of size `dt = tau / m`,
///
/// ```text
///     U(t_{n+1}) = e^{dt A} U(t_n)
///                + k * sum_i  w_i dt e^{(1 - x_i) dt A} * input * y(t_n + x_i dt - tau)
/// ```
///
/// with Gauss-Legendre nodes `x_i` and weights `w_i` on each panel between
/// adjacent delayed samples; composing the exponentials over a whole delay
/// interval reproduces the interval-by-interval representation exactly. The
/// propagators are precomputed once, so each step costs a few small
/// matrix-vector products plus cubic reads of the delayed signal between
/// samples. Every step is recorded.
pub fn duhamel_oracle<T: Scalar>(
    system: &DelaySystem<T>,
    u0: &DVector<T>,
    history: &History<T>,
    horizon: T,
    quad_points: usize,
) -> Result<Trajectory<T>> {
    if system.nonlinearity.is_some() {
        return Err(Error::domain(
            "the variation-of-constants oracle handles linear systems only",
        ));
    }
    check_dimensions(system, u0, history)?;
    let m = history.m();
    let dt = system.tau / real_of::<T>(m);
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(Error::config("horizon must be strictly positive and finite"));
    }
    let n_steps = (horizon / dt)
        .round()
        .to_usize()
        .ok_or_else(|| Error::config("horizon / dt does not fit in a step count"))?;
    if n_steps == 0 {
        return Err(Error::config("horizon shorter than one time step"));
    }

    let (nodes, weights) = gauss_legendre_01(quad_points)?;
    let e_dt = expm(&(&system.a * dt));
    let propagators: Vec<DMatrix<T>> = nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| {
            expm(&(&system.a * (dt * (T::one() - x)))) * &system.input_map * (system.k * w * dt)
        })
        .collect();

    let mut buffer: Vec<DVector<T>> = Vec::with_capacity(m + n_steps + 1);
    buffer.extend_from_slice(history.samples());

    let mut traj = empty_trajectory(dt, 1);
    record_sample(&mut traj, system, T::zero(), u0);

    let guard = real::<T>(1e12);
    let mut u = u0.clone();
    for n in 0..n_steps {
        let mut u_next = &e_dt * &u;
        for (i, prop) in propagators.iter().enumerate() {
            let y = read_delayed(&buffer, real_of::<T>(n) + nodes[i], m);
            u_next += prop * y;
        }
        let nrm = system.state_norm(&u_next);
        if !nrm.is_finite() || nrm > guard {
            traj.diverged = true;
            break;
        }
        u = u_next;
        buffer.push(system.output(&u));
        record_sample(&mut traj, system, real_of::<T>(n + 1) * dt, &u);
    }
    Ok(traj)
}

/// Channel samples `Z(0, rho_i) = y(-rho_i tau)` on the transport grid
/// `rho_i = i / n_rho`, interpolated linearly from the history when the two
/// grids do not align. The entry at `i = 0` is the algebraic boundary node
/// `Z(t, 0) = y(t)`; the solver carries it through the live state, so only
/// the entries `1..=n_rho` enter the evolved augmented state.
pub fn transport_initial_profile<T: Scalar>(
    history: &History<T>,
    n_rho: usize,
) -> Result<Vec<DVector<T>>> {
    if n_rho < 8 {
        return Err(Error::config("transport grid needs at least 8 cells"));
    }
    let m = history.m();
    let mut profile = Vec::with_capacity(n_rho + 1);
    for i in 0..=n_rho {
        // rho_i = i / n_rho maps to history position j = m (1 - rho_i).
        let jf = real_of::<T>(m)
            * (T::one() - real_of::<T>(i) / real_of::<T>(n_rho));
        let j0 = jf
            .floor()
            .to_usize()
            .expect("position is within 0..=m by construction");
        if j0 >= m {
            profile.push(history.sample(m).clone());
        } else {
            let frac = jf - real_of::<T>(j0);
            profile.push(history.sample(j0) * (T::one() - frac) + history.sample(j0 + 1) * frac);
        }
    }
    Ok(profile)
}

/// Linear operator of the coupled `(U, Z_1 .. Z_{n_rho})` system: upwind
/// transport at speed `1/tau` in `rho`, inflow `Z_0 = output * U`
/// substituted into the first transport row, and the delayed coupling read
/// from the outflow node `Z_{n_rho}`.
fn transport_operator<T: Scalar>(system: &DelaySystem<T>, n_rho: usize) -> DMatrix<T> {
    let dim = system.dim();
    let p = system.channel_dim();
    let total = dim + n_rho * p;
    let speed = real_of::<T>(n_rho) / system.tau;
    let mut op = DMatrix::zeros(total, total);
    op.view_mut((0, 0), (dim, dim)).copy_from(&system.a);
    let kin = &system.input_map * system.k;
    op.view_mut((0, dim + (n_rho - 1) * p), (dim, p)).copy_from(&kin);
    let inflow = &system.output_map * speed;
    op.view_mut((dim, 0), (p, dim)).copy_from(&inflow);
    for i in 0..n_rho {
        let row = dim + i * p;
        for j in 0..p {
            op[(row + j, row + j)] = -speed;
            if i > 0 {
                op[(row + j, row - p + j)] = speed;
            }
        }
    }
    op
}

/// Integrates the transport-augmented system and returns the `U`-component
/// trajectory.
///
/// The augmented state is `(U, Z_1 .. Z_{n_rho})` with `Z_i` tracking
/// `y(t - rho_i tau)` on `n_rho` first-order upwind cells; the delay never
/// appears explicitly, so the integrators run without any buffer reads. The
/// step must satisfy the Courant condition `dt <= tau / n_rho`; the explicit
/// integrator is unstable past it and the upwind profile is unresolved
/// there regardless of the integrator, so the check is unconditional.
pub fn solve_transport_augmented<T: Scalar>(
    system: &DelaySystem<T>,
    u0: &DVector<T>,
    history: &History<T>,
    config: &SolverConfig<T>,
    n_rho: usize,
) -> Result<Trajectory<T>> {
    check_dimensions(system, u0, history)?;
    let n_steps = check_alignment(system.tau, history.m(), config)?;
    let courant_limit = system.tau / real_of::<T>(n_rho);
    if config.dt > courant_limit * (T::one() + T::default_epsilon() * real(64.0)) {
        return Err(Error::config(format!(
            "time step violates the Courant condition: dt must not exceed tau / n_rho = {courant_limit}"
        )));
    }

    let dim = system.dim();
    let p = system.channel_dim();
    let total = dim + n_rho * p;
    let dt = config.dt;
    let half = real::<T>(0.5);
    let op = transport_operator(system, n_rho);

    let profile = transport_initial_profile(history, n_rho)?;
    let mut w = DVector::zeros(total);
    w.rows_mut(0, dim).copy_from(u0);
    for (i, z) in profile.iter().enumerate().skip(1) {
        w.rows_mut(dim + (i - 1) * p, p).copy_from(z);
    }

    let rhs = |w: &DVector<T>| -> DVector<T> {
        let mut dw = &op * w;
        if system.nonlinearity.is_some() {
            let u_part = w.rows(0, dim).into_owned();
            let mut fu = DVector::zeros(dim);
            system.add_nonlinear(&u_part, &mut fu);
            dw.rows_mut(0, dim).zip_apply(&fu, |d, f| *d += f);
        }
        dw
    };

    let midpoint_lu = match config.integrator {
        Integrator::Rk4 => None,
        Integrator::ImplicitMidpoint => {
            let lhs = DMatrix::identity(total, total) - &op * (dt * half);
            Some(lhs.lu())
        }
    };

    let mut traj = empty_trajectory(dt, config.record_every);
    record_sample(&mut traj, system, T::zero(), u0);

    for n in 0..n_steps {
        let w_next = match config.integrator {
            Integrator::Rk4 => {
                let k1 = rhs(&w);
                let k2 = rhs(&(&w + &k1 * (dt * half)));
                let k3 = rhs(&(&w + &k2 * (dt * half)));
                let k4 = rhs(&(&w + &k3 * dt));
                &w + (k1 + k2 * real::<T>(2.0) + k3 * real::<T>(2.0) + k4) * (dt / real::<T>(6.0))
            }
            Integrator::ImplicitMidpoint => {
                let lu = midpoint_lu.as_ref().expect("factored once above");
                if system.nonlinearity.is_none() {
                    let v = lu.solve(&w).ok_or_else(|| {
                        Error::linalg("midpoint matrix is singular at this time step")
                    })?;
                    v * real::<T>(2.0) - &w
                } else {
                    let mut v = w.clone();
                    let tol = T::default_epsilon() * real::<T>(64.0);
                    let mut converged = false;
                    for _ in 0..MIDPOINT_MAX_ITER {
                        let u_part = v.rows(0, dim).into_owned();
                        let mut fu = DVector::zeros(dim);
                        system.add_nonlinear(&u_part, &mut fu);
                        let mut rhs_vec = w.clone();
                        rhs_vec.rows_mut(0, dim).zip_apply(&fu, |r, f| *r += dt * half * f);
                        let v_new = lu.solve(&rhs_vec).ok_or_else(|| {
                            Error::linalg("midpoint matrix is singular at this time step")
                        })?;
                        let delta = (&v_new - &v).norm();
                        v = v_new;
                        if delta <= tol * (T::one() + v.norm()) {
                            converged = true;
                            break;
                        }
                    }
                    if !converged {
                        return Err(Error::linalg(
                            "implicit midpoint fixed point did not converge; reduce dt",
                        ));
                    }
                    v * real::<T>(2.0) - &w
                }
            }
        };

        let u_part = w_next.rows(0, dim).into_owned();
        let nrm = system.state_norm(&u_part);
        if !nrm.is_finite() || nrm > config.blowup_guard {
            traj.diverged = true;
            break;
        }
        w = w_next;
        if (n + 1) % config.record_every == 0 {
            record_sample(&mut traj, system, real_of::<T>(n + 1) * dt, &u_part);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{ModelLabels, Nonlinearity};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::collections::BTreeMap;

    const LN2: f64 = std::f64::consts::LN_2;

    fn labels(name: &str) -> ModelLabels {
        ModelLabels { name: name.to_string(), params: BTreeMap::new(), notes: Vec::new() }
    }

    fn scalar_system(k: f64) -> DelaySystem<f64> {
        DelaySystem {
            a: DMatrix::from_element(1, 1, -1.0),
            output_map: DMatrix::identity(1, 1),
            input_map: DMatrix::identity(1, 1),
            output_weights: DVector::from_element(1, 1.0),
            k,
            tau: LN2,
            nonlinearity: None,
            gram: None,
            velocity_split: None,
            labels: labels("scalar-toy"),
        }
    }

    fn ones_history(m: usize) -> History<f64> {
        History::constant(LN2, m, DVector::from_element(1, 1.0)).unwrap()
    }

    /// On the first interval the scalar system has the integrating-factor
    /// solution U(t) = k + (1 - k) e^{-t}.
    fn scalar_exact(k: f64, t: f64) -> f64 {
        k + (1.0 - k) * (-t).exp()
    }

    #[test]
    fn scalar_first_interval_matches_integrating_factor() {
        let sys = scalar_system(0.5);
        let m = 2048;
        let config = SolverConfig::new(LN2 / m as f64, LN2);
        let traj =
            solve_method_of_steps(&sys, &DVector::from_element(1, 1.0), &ones_history(m), &config)
                .unwrap();
        let end = traj.states.last().unwrap()[0];
        assert_abs_diff_eq!(end, 0.75, epsilon = 1e-8);
        let mid = traj.states[m / 2][0];
        assert_abs_diff_eq!(mid, scalar_exact(0.5, traj.times[m / 2]), epsilon = 1e-10);
    }

    #[test]
    fn implicit_midpoint_matches_closed_form() {
        let sys = scalar_system(0.5);
        let m = 2048;
        let config = SolverConfig::new(LN2 / m as f64, LN2)
            .with_integrator(Integrator::ImplicitMidpoint);
        let traj =
            solve_method_of_steps(&sys, &DVector::from_element(1, 1.0), &ones_history(m), &config)
                .unwrap();
        assert_abs_diff_eq!(traj.states.last().unwrap()[0], 0.75, epsilon = 1e-6);
    }

    #[test]
    fn halving_dt_cuts_rk4_error_by_an_order_consistent_factor() {
        let sys = scalar_system(0.5);
        let err_at = |m: usize| {
            let config = SolverConfig::new(LN2 / m as f64, LN2);
            let traj = solve_method_of_steps(
                &sys,
                &DVector::from_element(1, 1.0),
                &ones_history(m),
                &config,
            )
            .unwrap();
            (traj.states.last().unwrap()[0] - 0.75).abs()
        };
        let coarse = err_at(16);
        let fine = err_at(32);
        assert!(
            coarse / fine >= 12.0,
            "convergence ratio {} below fourth-order expectation",
            coarse / fine
        );
    }

    #[test]
    fn zero_gain_matches_dense_exponential() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.5]);
        let sys = DelaySystem {
            a: a.clone(),
            output_map: DMatrix::identity(2, 2),
            input_map: DMatrix::identity(2, 2),
            output_weights: DVector::from_element(2, 1.0),
            k: 0.0,
            tau: LN2,
            nonlinearity: None,
            gram: None,
            velocity_split: None,
            labels: labels("undelayed"),
        };
        let m = 256;
        let config = SolverConfig::new(LN2 / m as f64, 2.0 * LN2);
        let u0 = DVector::from_row_slice(&[1.0, -0.3]);
        let history = History::zero(LN2, m, 2).unwrap();
        let traj = solve_method_of_steps(&sys, &u0, &history, &config).unwrap();
        let exact = expm(&(&a * (2.0 * LN2))) * &u0;
        let end = traj.states.last().unwrap();
        assert_abs_diff_eq!((end - exact).norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn oracle_scalar_value_at_tau() {
        let sys = scalar_system(0.5);
        let traj =
            duhamel_oracle(&sys, &DVector::from_element(1, 1.0), &ones_history(64), LN2, 32)
                .unwrap();
        assert_abs_diff_eq!(traj.states.last().unwrap()[0], 0.75, epsilon = 1e-10);
    }

    #[test]
    fn oracle_zero_gain_is_pure_semigroup() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.2, 1.0, 0.0, -0.7]);
        let sys = DelaySystem {
            a: a.clone(),
            output_map: DMatrix::identity(2, 2),
            input_map: DMatrix::identity(2, 2),
            output_weights: DVector::from_element(2, 1.0),
            k: 0.0,
            tau: 1.0,
            nonlinearity: None,
            gram: None,
            velocity_split: None,
            labels: labels("undelayed"),
        };
        let u0 = DVector::from_row_slice(&[0.4, 1.0]);
        let history = History::zero(1.0, 32, 2).unwrap();
        let traj = duhamel_oracle(&sys, &u0, &history, 3.0, 4).unwrap();
        let end_t = *traj.times.last().unwrap();
        let exact = expm(&(&a * end_t)) * &u0;
        assert_abs_diff_eq!((traj.states.last().unwrap() - exact).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_matches_per_mode_closed_form_on_diagonal_system() {
        // Each mode of a diagonal system with constant history c solves
        // U_i' = lambda_i U_i + k c, so on the first interval
        // U_i(t) = e^{lambda_i t} u0_i + k c (e^{lambda_i t} - 1) / lambda_i.
        let lambdas: [f64; 4] = [-1.0, -2.0, -0.5, -3.0];
        let a = DMatrix::from_diagonal(&DVector::from_row_slice(&lambdas));
        let k = 0.3;
        let sys = DelaySystem {
            a,
            output_map: DMatrix::identity(4, 4),
            input_map: DMatrix::identity(4, 4),
            output_weights: DVector::from_element(4, 1.0),
            k,
            tau: 0.8,
            nonlinearity: None,
            gram: None,
            velocity_split: None,
            labels: labels("diagonal"),
        };
        let u0 = DVector::from_row_slice(&[1.0, -1.0, 0.5, 2.0]);
        let c = 0.7;
        let history = History::constant(0.8, 128, DVector::from_element(4, c)).unwrap();
        let traj = duhamel_oracle(&sys, &u0, &history, 0.8, 6).unwrap();
        let end = traj.states.last().unwrap();
        for (i, &lam) in lambdas.iter().enumerate() {
            let exact = (lam * 0.8).exp() * u0[i] + k * c * ((lam * 0.8).exp() - 1.0) / lam;
            assert_relative_eq!(end[i], exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn method_of_steps_agrees_with_oracle_on_coupled_system() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                -0.5, 1.0, 0.0, 0.2, -1.0, -0.5, 0.3, 0.0, 0.0, -0.3, -0.8, 1.0, 0.1, 0.0, -1.0,
                -0.8,
            ],
        );
        let sys = DelaySystem {
            a,
            output_map: DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.5, 0.0]),
            input_map: DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 0.0, 0.5]),
            output_weights: DVector::from_element(1, 1.0),
            k: 0.4,
            tau: 0.6,
            nonlinearity: None,
            gram: None,
            velocity_split: None,
            labels: labels("coupled"),
        };
        let u0 = DVector::from_row_slice(&[1.0, 0.0, -0.5, 0.25]);
        let m = 256;
        let history =
            History::from_fn(0.6, m, |t: f64| DVector::from_element(1, (2.0 * t).cos())).unwrap();
        let config = SolverConfig::new(0.6 / m as f64, 6.0);
        let mos = solve_method_of_steps(&sys, &u0, &history, &config).unwrap();
        let oracle = duhamel_oracle(&sys, &u0, &history, 6.0, 5).unwrap();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (s, o) in mos.states.iter().zip(&oracle.states) {
            worst = worst.max((s - o).norm());
            scale = scale.max(o.norm());
        }
        assert!(worst / scale < 1e-6, "solver routes disagree: {}", worst / scale);
    }

    #[test]
    fn oracle_rejects_nonlinear_systems() {
        let mut sys = scalar_system(0.1);
        sys.a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.5]);
        sys.output_map = DMatrix::identity(2, 2);
        sys.input_map = DMatrix::identity(2, 2);
        sys.output_weights = DVector::from_element(2, 1.0);
        sys.velocity_split = Some(1);
        sys.nonlinearity = Some(Nonlinearity::PowerWave { beta: 2.0 });
        let history = History::zero(LN2, 16, 2).unwrap();
        let err = duhamel_oracle(&sys, &DVector::zeros(2), &history, 1.0, 4).unwrap_err();
        assert!(err.to_string().contains("linear"));
    }

    #[test]
    fn misaligned_dt_is_rejected() {
        let sys = scalar_system(0.5);
        let u0 = DVector::from_element(1, 1.0);
        // dt does not divide tau
        let config = SolverConfig::new(LN2 / 100.5, LN2);
        assert!(solve_method_of_steps(&sys, &u0, &ones_history(100), &config).is_err());
        // dt divides tau but disagrees with the history resolution
        let config = SolverConfig::new(LN2 / 128.0, LN2);
        assert!(solve_method_of_steps(&sys, &u0, &ones_history(64), &config).is_err());
    }

    #[test]
    fn blowup_sets_diverged_flag_instead_of_erroring() {
        let mut sys = scalar_system(0.0);
        sys.a = DMatrix::from_element(1, 1, 1.0);
        let mut config = SolverConfig::new(LN2 / 16.0, 30.0);
        config.blowup_guard = 1e6;
        let traj =
            solve_method_of_steps(&sys, &DVector::from_element(1, 1.0), &ones_history(16), &config)
                .unwrap();
        assert!(traj.diverged);
        let last = traj.last_time().unwrap();
        assert!(last < 30.0, "guard should have tripped before the horizon, got {last}");
        assert!(traj.norms.iter().all(|n| n.is_finite() && *n <= 1e6));
    }

    #[test]
    fn record_every_thins_the_output() {
        let sys = scalar_system(0.5);
        let m = 64;
        let config = SolverConfig::new(LN2 / m as f64, LN2).with_record_every(8);
        let traj =
            solve_method_of_steps(&sys, &DVector::from_element(1, 1.0), &ones_history(m), &config)
                .unwrap();
        assert_eq!(traj.len(), 1 + m / 8);
        assert_relative_eq!(traj.times[1] - traj.times[0], 8.0 * LN2 / m as f64);
    }

    #[test]
    fn identical_inputs_give_bit_identical_trajectories() {
        let sys = scalar_system(0.5);
        let m = 128;
        let config = SolverConfig::new(LN2 / m as f64, 3.0 * LN2);
        let run = || {
            solve_method_of_steps(&sys, &DVector::from_element(1, 1.0), &ones_history(m), &config)
                .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.states, b.states);
        assert_eq!(a.norms, b.norms);
        let oracle = |_: ()| {
            duhamel_oracle(&sys, &DVector::from_element(1, 1.0), &ones_history(m), LN2, 5).unwrap()
        };
        assert_eq!(oracle(()).states, oracle(()).states);
    }

    #[test]
    fn transport_profile_interpolates_the_history() {
        let m = 32;
        let history =
            History::from_fn(1.0, m, |t: f64| DVector::from_element(1, t.sin() + 2.0)).unwrap();
        let profile = transport_initial_profile(&history, 16).unwrap();
        assert_eq!(profile.len(), 17);
        // rho = 1 is the oldest stored sample, rho = 0 the newest.
        assert_eq!(profile[16], *history.sample(0));
        assert_eq!(profile[0], *history.sample(m));
        // A non-divisor grid hits exact samples where indices align.
        let profile = transport_initial_profile(&history, 24).unwrap();
        // i = 3: position m (1 - 3/24) = 28 exactly.
        assert_abs_diff_eq!(profile[3][0], history.sample(28)[0], epsilon = 1e-14);
        // i = 2: position 29 + 1/3, between samples 29 and 30.
        let expect = history.sample(29)[0] * (2.0 / 3.0) + history.sample(30)[0] * (1.0 / 3.0);
        assert_abs_diff_eq!(profile[2][0], expect, epsilon = 1e-14);
    }

    #[test]
    fn transport_zero_gain_matches_method_of_steps() {
        let sys = scalar_system(0.0);
        let m = 128;
        let config = SolverConfig::new(LN2 / m as f64, 2.0 * LN2);
        let u0 = DVector::from_element(1, 1.0);
        let mos = solve_method_of_steps(&sys, &u0, &ones_history(m), &config).unwrap();
        let aug = solve_transport_augmented(&sys, &u0, &ones_history(m), &config, 64).unwrap();
        for (a, b) in mos.states.iter().zip(&aug.states) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn transport_tracks_method_of_steps_at_first_order() {
        let sys = scalar_system(0.5);
        let m = 800;
        let config = SolverConfig::new(LN2 / m as f64, 5.0 * LN2);
        let u0 = DVector::from_element(1, 1.0);
        let mos = solve_method_of_steps(&sys, &u0, &ones_history(m), &config).unwrap();
        let aug = solve_transport_augmented(&sys, &u0, &ones_history(m), &config, 400).unwrap();
        for target in [1.0, 2.0, 5.0] {
            let idx = (target * LN2 / config.dt).round() as usize;
            let diff = (mos.states[idx][0] - aug.states[idx][0]).abs();
            assert!(diff <= 1e-3, "transport off by {diff} at t = {} tau", target);
        }
    }

    #[test]
    fn transport_discrepancy_halves_when_grid_doubles() {
        let sys = scalar_system(0.5);
        let m = 800;
        let config = SolverConfig::new(LN2 / m as f64, 3.0 * LN2);
        let u0 = DVector::from_element(1, 1.0);
        let mos = solve_method_of_steps(&sys, &u0, &ones_history(m), &config).unwrap();
        let sup_err = |n_rho: usize| {
            let aug =
                solve_transport_augmented(&sys, &u0, &ones_history(m), &config, n_rho).unwrap();
            mos.states
                .iter()
                .zip(&aug.states)
                .map(|(a, b)| (a[0] - b[0]).abs())
                .fold(0.0f64, f64::max)
        };
        let ratio = sup_err(200) / sup_err(100);
        assert!(
            (0.4..=0.6).contains(&ratio),
            "expected first-order halving, got ratio {ratio}"
        );
    }

    #[test]
    fn transport_rejects_courant_violation() {
        let sys = scalar_system(0.5);
        let m = 100;
        let config = SolverConfig::new(LN2 / m as f64, LN2);
        let err = solve_transport_augmented(
            &sys,
            &DVector::from_element(1, 1.0),
            &ones_history(m),
            &config,
            128,
        )
        .unwrap_err();
        assert!(err.to_string().contains("Courant"));
    }

    #[test]
    fn transport_implicit_midpoint_agrees_with_rk4() {
        let sys = scalar_system(0.5);
        let m = 512;
        let u0 = DVector::from_element(1, 1.0);
        let rk = SolverConfig::new(LN2 / m as f64, 2.0 * LN2);
        let im = rk.with_integrator(Integrator::ImplicitMidpoint);
        let a = solve_transport_augmented(&sys, &u0, &ones_history(m), &rk, 256).unwrap();
        let b = solve_transport_augmented(&sys, &u0, &ones_history(m), &im, 256).unwrap();
        let worst = a
            .states
            .iter()
            .zip(&b.states)
            .map(|(x, y)| (x[0] - y[0]).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-5, "integrators disagree by {worst}");
    }

    #[test]
    fn midpoint_and_rk4_agree_on_a_nonlinear_system() {
        let sys = DelaySystem {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.5]),
            output_map: DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
            input_map: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            output_weights: DVector::from_element(1, 1.0),
            k: 0.1,
            tau: 0.5,
            nonlinearity: Some(Nonlinearity::PowerWave { beta: 2.0 }),
            gram: None,
            velocity_split: Some(1),
            labels: labels("nonlinear-toy"),
        };
        let m = 1024;
        let u0 = DVector::from_row_slice(&[0.4, 0.0]);
        let history = History::zero(0.5, m, 1).unwrap();
        let rk = SolverConfig::new(0.5 / m as f64, 2.0);
        let im = rk.with_integrator(Integrator::ImplicitMidpoint);
        let a = solve_method_of_steps(&sys, &u0, &history, &rk).unwrap();
        let b = solve_method_of_steps(&sys, &u0, &history, &im).unwrap();
        let worst = a
            .states
            .iter()
            .zip(&b.states)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-5, "integrators disagree by {worst}");
    }
}
