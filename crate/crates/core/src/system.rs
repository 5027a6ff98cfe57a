//! State-space realization of a delayed-feedback evolution equation
//!
//! ```text
//!     U'(t) = A U(t) + F(U(t)) + k * input_map * y(t - tau)
//!     y(t)  = output_map * U(t)
//! ```
//!
//! The delayed channel is factored into an output map (what the feedback
//! observes) and an input map (how the observation re-enters the dynamics).
//! For a bounded feedback operator the output map is the operator itself and
//! the input map is the identity, so the stored delayed signal is exactly the
//! feedback term's value. For feedback of the form C C* the output map
//! realizes C* (a small number of observation channels) and the input map
//! realizes C, typically with mesh-dependent scaling that grows under
//! refinement. Histories and trajectory output records always live in the
//! channel space of `output_map`, matching the initial data the underlying
//! model prescribes on the delay window.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::GramFactor;
use crate::scalar::Scalar;
use crate::wire;

/// Which analytical regime a model or certificate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    BoundedLinear,
    BoundedSemilinear,
    UnboundedLinear,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::BoundedLinear => "bounded-linear",
            Regime::BoundedSemilinear => "bounded-semilinear",
            Regime::UnboundedLinear => "unbounded-linear",
        };
        f.write_str(s)
    }
}

/// Provenance attached to a built model: catalog name, build parameters,
/// and free-form notes (grid snapping, sign conventions).
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ModelLabels {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// Nonlinear term of the evolution equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Nonlinearity<T> {
    /// Superlinear restoring force `|u|^beta u`, applied nodewise to the
    /// displacement block and added to the velocity equations. Requires the
    /// system to declare a velocity split.
    PowerWave { beta: T },
}

/// Dense realization of a delayed-feedback evolution equation.
///
/// Fields are public: builders produce validated instances, and
/// [`validate_system`] re-checks any hand-assembled one.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned")
)]
pub struct DelaySystem<T: Scalar> {
    /// Generator realization, `dim x dim`.
    #[serde(with = "wire::mat")]
    pub a: DMatrix<T>,
    /// Delayed-channel observation, `p x dim`.
    #[serde(with = "wire::mat")]
    pub output_map: DMatrix<T>,
    /// Delayed-channel injection, `dim x p`.
    #[serde(with = "wire::mat")]
    pub input_map: DMatrix<T>,
    /// Quadrature weights of the channel space (all positive, length `p`).
    #[serde(with = "wire::vec")]
    pub output_weights: DVector<T>,
    /// Feedback gain multiplying the delayed term.
    pub k: T,
    /// Delay length, strictly positive.
    pub tau: T,
    /// Optional nonlinear term.
    pub nonlinearity: Option<Nonlinearity<T>>,
    /// SPD Gram matrix of the state norm; `None` means Euclidean.
    #[serde(with = "wire::opt_mat")]
    pub gram: Option<DMatrix<T>>,
    /// For second-order (wave-like) models: index where the velocity block
    /// starts, i.e. the number of displacement unknowns.
    pub velocity_split: Option<usize>,
    /// Model provenance.
    pub labels: ModelLabels,
}

impl<T: Scalar> DelaySystem<T> {
    /// State dimension.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Number of delayed-channel components.
    pub fn channel_dim(&self) -> usize {
        self.output_map.nrows()
    }

    /// Square feedback matrix `input_map * output_map`.
    #[must_use]
    pub fn feedback_matrix(&self) -> DMatrix<T> {
        &self.input_map * &self.output_map
    }

    /// Norm of a state vector in the model geometry.
    pub fn state_norm(&self, v: &DVector<T>) -> T {
        match &self.gram {
            None => v.norm(),
            Some(g) => {
                let q = v.dot(&(g * v));
                q.max(T::zero()).sqrt()
            }
        }
    }

    /// Delayed-channel observation of a state.
    #[must_use]
    pub fn output(&self, v: &DVector<T>) -> DVector<T> {
        &self.output_map * v
    }

    /// Norm of a channel value under the channel quadrature weights.
    pub fn channel_norm(&self, y: &DVector<T>) -> T {
        let mut acc = T::zero();
        for (i, yi) in y.iter().enumerate() {
            acc += self.output_weights[i] * *yi * *yi;
        }
        acc.max(T::zero()).sqrt()
    }

    /// Adds the nonlinear term evaluated at `state` into `out`.
    pub fn add_nonlinear(&self, state: &DVector<T>, out: &mut DVector<T>) {
        if let Some(Nonlinearity::PowerWave { beta }) = &self.nonlinearity {
            let split = self
                .velocity_split
                .expect("validated system: PowerWave requires a velocity split");
            for i in 0..split {
                let u = state[i];
                out[split + i] += u.abs().powf(*beta) * u;
            }
        }
    }

    /// Gram factor of the state norm, `None` for Euclidean geometry.
    pub fn gram_factor(&self) -> Result<Option<GramFactor<T>>> {
        self.gram.as_ref().map(GramFactor::new).transpose()
    }

    /// Serializes to the self-describing JSON text format.
    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Parses the self-describing JSON text format.
    pub fn from_json(text: &str) -> Result<Self>
    where
        T: serde::de::DeserializeOwned,
    {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// One failed structural check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Checks dimensional consistency, positivity of the delay, channel weights,
/// and definiteness of the Gram matrix. Returns every violation instead of
/// failing on the first one.
pub fn validate_system<T: Scalar>(sys: &DelaySystem<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: &str, rule: String| {
        out.push(Violation { field: field.to_string(), rule });
    };

    let dim = sys.a.nrows();
    if dim == 0 || sys.a.ncols() != dim {
        push("a", format!("must be square and nonempty, got {}x{}", sys.a.nrows(), sys.a.ncols()));
    }
    if sys.output_map.ncols() != dim {
        push(
            "output_map",
            format!("must have {} columns, got {}", dim, sys.output_map.ncols()),
        );
    }
    let p = sys.output_map.nrows();
    if p == 0 {
        push("output_map", "must have at least one channel row".to_string());
    }
    if sys.input_map.nrows() != dim || sys.input_map.ncols() != p {
        push(
            "input_map",
            format!(
                "must be {}x{}, got {}x{}",
                dim,
                p,
                sys.input_map.nrows(),
                sys.input_map.ncols()
            ),
        );
    }
    if sys.output_weights.len() != p {
        push(
            "output_weights",
            format!("must have length {}, got {}", p, sys.output_weights.len()),
        );
    } else if sys.output_weights.iter().any(|w| !(*w > T::zero())) {
        push("output_weights", "must all be strictly positive".to_string());
    }
    if !(sys.tau > T::zero()) || !sys.tau.is_finite() {
        push("tau", "must be strictly positive and finite".to_string());
    }
    if !sys.k.is_finite() {
        push("k", "must be finite".to_string());
    }
    if let Some(g) = &sys.gram {
        if g.nrows() != dim || g.ncols() != dim {
            push("gram", format!("must be {}x{}, got {}x{}", dim, dim, g.nrows(), g.ncols()));
        } else if GramFactor::new(g).is_err() {
            push("gram", "must be symmetric positive definite".to_string());
        }
    }
    match (sys.velocity_split, &sys.nonlinearity) {
        (Some(s), _) if s == 0 || s >= dim => {
            push("velocity_split", format!("must lie strictly inside the state, got {s} of {dim}"));
        }
        (None, Some(Nonlinearity::PowerWave { .. })) => {
            push("nonlinearity", "PowerWave requires a velocity split".to_string());
        }
        _ => {}
    }
    if let Some(Nonlinearity::PowerWave { beta }) = &sys.nonlinearity {
        if !(*beta > T::zero()) {
            push("nonlinearity", "PowerWave exponent must be strictly positive".to_string());
        }
    }
    out
}
