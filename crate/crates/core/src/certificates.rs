//! Closed-form stability certificates for delayed feedback.
//!
//! Given exponential-stability constants of the undelayed dynamics, these
//! routines compute the largest certifiable gain `k0`, the decay-rate loss
//! `sigma` caused by a gain `k`, and explicit interval-indexed envelopes that
//! a simulated trajectory can be checked against sample by sample.
//!
//! Two regimes share the machinery. In the bounded regime the feedback
//! operator norm `B` enters directly:
//!
//! ```text
//!     k0    = (e^{tau w} - 1) / (tau B M e^{tau w})
//!     sigma = ln(1 + |k| tau B M e^{w tau}) / tau
//! ```
//!
//! In the unbounded regime the feedback factors through an observation
//! channel and the admissibility constants `C1..C3` replace `B`:
//!
//! ```text
//!     M'    = max(M, 1),   C4 = max(C2, C3 / (M' C1))
//!     k0    = (e^{tau w} - 1) / (M'^2 C1 C4 e^{2 w tau})
//!     delta = |k| C1 M' e^{2 w tau}
//!     sigma = ln(1 + |k| C4 M'^2 C1 e^{2 w tau}) / tau
//! ```
//!
//! Both regimes satisfy the boundary identity `sigma(k0) = omega` exactly,
//! which the test suite pins to near machine precision. All arithmetic is
//! double precision; the tests compare against references evaluated in
//! extended (50-digit) precision.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::History;
use crate::scalar::{real, real_of, Scalar};
use crate::system::Regime;

/// Exponential-stability constants of the undelayed semigroup:
/// `norm(S(t)) <= m * exp(-omega * t)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SemigroupEstimate<T> {
    /// Overshoot constant, at least 1.
    pub m: T,
    /// Certified decay rate, strictly positive.
    pub omega: T,
    /// Fraction of the spectral abscissa given up when estimating `m` on a
    /// finite horizon; zero when the constants were supplied directly.
    pub margin: T,
}

impl<T: Scalar> SemigroupEstimate<T> {
    pub fn new(m: T, omega: T, margin: T) -> Result<Self> {
        if !(m >= T::one()) || !m.is_finite() {
            return Err(Error::domain("semigroup overshoot must be finite and at least 1"));
        }
        if !(omega > T::zero()) || !omega.is_finite() {
            return Err(Error::domain("semigroup decay rate must be strictly positive"));
        }
        if !(margin >= T::zero() && margin < T::one()) {
            return Err(Error::domain("semigroup margin must lie in [0, 1)"));
        }
        Ok(SemigroupEstimate { m, omega, margin })
    }
}

/// Everything a gain certificate asserts, in one flat record.
///
/// Regime-specific constants are `None` when they do not apply. `alpha` is
/// the history weight of a concrete experiment and is attached by the
/// pipeline that computed it, not by the certificate constructors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityCertificate<T> {
    pub regime: Regime,
    pub m: T,
    pub omega: T,
    pub tau: T,
    pub k: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bnorm: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c3: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c4: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_prime: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<T>,
    /// Largest gain magnitude the certificate covers.
    pub k0: T,
    /// Decay-rate loss at gain `k`.
    pub sigma: T,
    /// Guaranteed decay rate `omega - sigma` of the closed loop.
    pub omega_prime: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<T>,
    /// Verdict: `|k| < k0`.
    pub stable: bool,
}

/// Pointwise exponential envelope `prefactor * exp(rate * t)` with its
/// building blocks kept visible.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnvelopeParams<T> {
    pub prefactor: T,
    /// `sigma - omega`; negative exactly when the certificate is stable
    /// with margin.
    pub rate: T,
    pub u0_norm: T,
    pub alpha: T,
}

impl<T: Scalar> EnvelopeParams<T> {
    pub fn eval(&self, t: T) -> T {
        self.prefactor * (self.rate * t).exp()
    }
}

fn require_positive<T: Scalar>(value: T, what: &str) -> Result<()> {
    if !(value > T::zero()) || !value.is_finite() {
        return Err(Error::domain(format!("{what} must be strictly positive and finite")));
    }
    Ok(())
}

/// Certificate for a bounded feedback operator of norm `bnorm`.
pub fn bounded_certificate<T: Scalar>(
    m: T,
    omega: T,
    tau: T,
    bnorm: T,
    k: T,
) -> Result<StabilityCertificate<T>> {
    if !(m >= T::one()) || !m.is_finite() {
        return Err(Error::domain("overshoot constant must be finite and at least 1"));
    }
    require_positive(omega, "decay rate")?;
    require_positive(tau, "delay")?;
    require_positive(bnorm, "feedback norm")?;
    if !k.is_finite() {
        return Err(Error::domain("gain must be finite"));
    }
    let e_wt = (omega * tau).exp();
    let k0 = (omega * tau).exp_m1() / (tau * bnorm * m * e_wt);
    let sigma = (k.abs() * tau * bnorm * m * e_wt).ln_1p() / tau;
    Ok(StabilityCertificate {
        regime: Regime::BoundedLinear,
        m,
        omega,
        tau,
        k,
        bnorm: Some(bnorm),
        c1: None,
        c2: None,
        c3: None,
        c4: None,
        m_prime: None,
        delta: None,
        k0,
        sigma,
        omega_prime: omega - sigma,
        gamma_max: None,
        alpha: None,
        stable: k.abs() < k0,
    })
}

/// Certificate for feedback factoring through an observation channel with
/// admissibility constants `c1`, `c2`, `c3`.
pub fn unbounded_certificate<T: Scalar>(
    m: T,
    omega: T,
    tau: T,
    c1: T,
    c2: T,
    c3: T,
    k: T,
) -> Result<StabilityCertificate<T>> {
    require_positive(m, "overshoot constant")?;
    require_positive(omega, "decay rate")?;
    require_positive(tau, "delay")?;
    require_positive(c1, "admissibility constant C1")?;
    require_positive(c2, "admissibility constant C2")?;
    require_positive(c3, "admissibility constant C3")?;
    if !k.is_finite() {
        return Err(Error::domain("gain must be finite"));
    }
    let m_prime = m.max(T::one());
    let c4 = c2.max(c3 / (m_prime * c1));
    let e_2wt = (real::<T>(2.0) * omega * tau).exp();
    let k0 = (omega * tau).exp_m1() / (m_prime * m_prime * c1 * c4 * e_2wt);
    let delta = k.abs() * c1 * m_prime * e_2wt;
    let sigma = (k.abs() * c4 * m_prime * m_prime * c1 * e_2wt).ln_1p() / tau;
    Ok(StabilityCertificate {
        regime: Regime::UnboundedLinear,
        m,
        omega,
        tau,
        k,
        bnorm: None,
        c1: Some(c1),
        c2: Some(c2),
        c3: Some(c3),
        c4: Some(c4),
        m_prime: Some(m_prime),
        delta: Some(delta),
        k0,
        sigma,
        omega_prime: omega - sigma,
        gamma_max: None,
        alpha: None,
        stable: k.abs() < k0,
    })
}

/// Channel norm of a sample under optional quadrature weights.
fn channel_norm<T: Scalar>(sample: &DVector<T>, weights: Option<&DVector<T>>) -> T {
    match weights {
        None => sample.norm(),
        Some(w) => {
            let mut acc = T::zero();
            for (i, v) in sample.iter().enumerate() {
                acc += w[i] * *v * *v;
            }
            acc.max(T::zero()).sqrt()
        }
    }
}

/// History weight `alpha = integral_0^tau e^{omega s} |f(s)| ds` by the
/// trapezoid rule on the history grid; the sample at `-tau + s` is the
/// integrand value at `s`.
pub fn history_weight_alpha<T: Scalar>(
    history: &History<T>,
    omega: T,
    weights: Option<&DVector<T>>,
) -> Result<T> {
    if !omega.is_finite() {
        return Err(Error::domain("history weight needs a finite decay rate"));
    }
    if let Some(w) = weights {
        if w.len() != history.channel_dim() {
            return Err(Error::domain("channel weights do not match the history dimension"));
        }
    }
    let m = history.m();
    let step = history.step();
    let mut acc = T::zero();
    for j in 0..=m {
        let s = real_of::<T>(j) * step;
        let value = (omega * s).exp() * channel_norm(history.sample(j), weights);
        let trap = if j == 0 || j == m { real::<T>(0.5) } else { T::one() };
        acc += trap * value;
    }
    Ok(acc * step)
}

/// `L^2(0, tau)` norm of the history signal, the weight the unbounded-regime
/// envelope uses in place of the exponentially weighted integral.
pub fn history_l2_norm<T: Scalar>(
    history: &History<T>,
    weights: Option<&DVector<T>>,
) -> Result<T> {
    if let Some(w) = weights {
        if w.len() != history.channel_dim() {
            return Err(Error::domain("channel weights do not match the history dimension"));
        }
    }
    let m = history.m();
    let step = history.step();
    let mut acc = T::zero();
    for j in 0..=m {
        let v = channel_norm(history.sample(j), weights);
        let trap = if j == 0 || j == m { real::<T>(0.5) } else { T::one() };
        acc += trap * v * v;
    }
    Ok((acc * step).max(T::zero()).sqrt())
}

fn envelope_prefactor<T: Scalar>(
    cert: &StabilityCertificate<T>,
    u0_norm: T,
    alpha: T,
) -> Result<T> {
    if !(u0_norm >= T::zero()) || !(alpha >= T::zero()) {
        return Err(Error::domain("envelope needs nonnegative initial norm and history weight"));
    }
    Ok(match cert.regime {
        Regime::BoundedLinear | Regime::BoundedSemilinear => {
            cert.m * (u0_norm + cert.k.abs() * alpha)
        }
        Regime::UnboundedLinear => {
            let m_prime = cert.m_prime.expect("unbounded certificate carries m_prime");
            let delta = cert.delta.expect("unbounded certificate carries delta");
            m_prime * (u0_norm + delta * alpha)
        }
    })
}

/// Smooth envelope `C exp((sigma - omega) t)` at one time.
pub fn envelope_bound<T: Scalar>(
    cert: &StabilityCertificate<T>,
    u0_norm: T,
    alpha: T,
    t: T,
) -> Result<T> {
    Ok(envelope_params(cert, u0_norm, alpha)?.eval(t))
}

/// The envelope as explicit parameters.
pub fn envelope_params<T: Scalar>(
    cert: &StabilityCertificate<T>,
    u0_norm: T,
    alpha: T,
) -> Result<EnvelopeParams<T>> {
    Ok(EnvelopeParams {
        prefactor: envelope_prefactor(cert, u0_norm, alpha)?,
        rate: cert.sigma - cert.omega,
        u0_norm,
        alpha,
    })
}

/// Interval-indexed envelope: on `t in [n tau, (n+1) tau)` the bound is
/// `C (e^{sigma tau})^n e^{-omega t}`, which is tighter than the smooth form
/// everywhere except at the interval's left edge, where they agree.
pub fn interval_envelope<T: Scalar>(
    cert: &StabilityCertificate<T>,
    u0_norm: T,
    alpha: T,
    t: T,
) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::domain("interval envelope is defined for t >= 0"));
    }
    let prefactor = envelope_prefactor(cert, u0_norm, alpha)?;
    let n = (t / cert.tau).floor().to_i32().ok_or_else(|| {
        Error::domain("interval index overflows; shorten the horizon or enlarge tau")
    })?;
    let growth = (cert.sigma * cert.tau).exp();
    Ok(prefactor * growth.powi(n) * (-cert.omega * t).exp())
}

/// Amplification estimate for the semilinear Gronwall step:
/// `tilde_M = M' sqrt(1 + B^2 h^2)` with `h^2 = (e^{2 w' tau} - 1)/(2 w' tau)`.
/// This majorant is an implementation choice, not an identity; its small
/// `w' tau` limit is `M' sqrt(1 + B^2)`.
pub fn tilde_m_estimate<T: Scalar>(m_prime: T, bnorm: T, tau: T, omega_prime: T) -> Result<T> {
    if !(m_prime >= T::one()) {
        return Err(Error::domain("tilde_M needs an overshoot constant at least 1"));
    }
    require_positive(bnorm, "feedback norm")?;
    require_positive(tau, "delay")?;
    if !(omega_prime >= T::zero()) || !omega_prime.is_finite() {
        return Err(Error::domain("tilde_M needs a nonnegative residual decay rate"));
    }
    let x = real::<T>(2.0) * omega_prime * tau;
    let h2 = if x == T::zero() { T::one() } else { x.exp_m1() / x };
    Ok(m_prime * (T::one() + bnorm * bnorm * h2).sqrt())
}

/// Largest Lipschitz budget the certificate leaves for a nonlinear term:
/// `gamma_max = omega' / tilde_M`. Errors when the closed loop has no
/// guaranteed decay left.
pub fn semilinear_thresholds<T: Scalar>(
    cert: &StabilityCertificate<T>,
    tilde_m: T,
) -> Result<T> {
    require_positive(tilde_m, "amplification estimate")?;
    if !(cert.omega_prime > T::zero()) {
        return Err(Error::domain(
            "no Lipschitz budget: the certified decay rate is not positive at this gain",
        ));
    }
    Ok(cert.omega_prime / tilde_m)
}

/// One row of the recursion cross-check table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RecursionRow<T> {
    pub ell: usize,
    pub k1: T,
    pub k2_recursive: T,
    pub k2_closed: T,
    pub rel_error: T,
}

/// Interval-constant table for the unbounded regime, computed both by the
/// literal recursion and by the closed form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecursionTable<T> {
    pub rows: Vec<RecursionRow<T>>,
    pub max_rel_error: T,
}

/// Runs the interval recursion
/// `K2(l+1) = C4 M' (|U0| + delta * sum_{j=-1}^{l} K2(j))`, seeded with
/// `K2(-1) = alpha`, against the closed form
/// `C4 M' (|U0| + delta alpha) (1 + delta C4 M')^l`, and errors if any row
/// disagrees beyond `tol` relative.
pub fn verify_recursions<T: Scalar>(
    cert: &StabilityCertificate<T>,
    u0_norm: T,
    ell_max: usize,
    tol: T,
) -> Result<RecursionTable<T>> {
    if cert.regime != Regime::UnboundedLinear {
        return Err(Error::domain("recursion table applies to the unbounded regime"));
    }
    let alpha = cert
        .alpha
        .ok_or_else(|| Error::domain("certificate carries no history weight alpha"))?;
    if !(u0_norm >= T::zero()) || !(alpha >= T::zero()) {
        return Err(Error::domain("recursion needs nonnegative initial norm and alpha"));
    }
    let c4 = cert.c4.expect("unbounded certificate carries c4");
    let m_prime = cert.m_prime.expect("unbounded certificate carries m_prime");
    let delta = cert.delta.expect("unbounded certificate carries delta");

    let base = c4 * m_prime * (u0_norm + delta * alpha);
    let growth = T::one() + delta * c4 * m_prime;
    let mut rows = Vec::with_capacity(ell_max + 1);
    let mut running = alpha; // sum of K2(-1) .. K2(ell - 1)
    let mut max_rel = T::zero();
    for ell in 0..=ell_max {
        let k2 = c4 * m_prime * (u0_norm + delta * running);
        let k1 = m_prime * (u0_norm + delta * running);
        let closed = base * growth.powi(ell as i32);
        let rel = if closed == T::zero() {
            (k2 - closed).abs()
        } else {
            ((k2 - closed) / closed).abs()
        };
        max_rel = max_rel.max(rel);
        rows.push(RecursionRow { ell, k1, k2_recursive: k2, k2_closed: closed, rel_error: rel });
        running += k2;
    }
    if !(max_rel <= tol) {
        return Err(Error::domain(format!(
            "interval recursion disagrees with closed form: max relative error {max_rel:e} > {tol:e}"
        )));
    }
    Ok(RecursionTable { rows, max_rel_error: max_rel })
}
