//! Delay-window history: the prescribed feedback input before time zero.
//!
//! A history stores `m + 1` uniformly spaced samples of the delayed-channel
//! signal on `[-tau, 0]`; sample `j` sits at `-tau + j * (tau / m)`. Sample
//! times are always reconstructed from `(tau, m)` with that exact formula,
//! never by accumulation, so repeated reconstruction is bit-identical.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{real_of, Scalar};
use crate::wire;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned")
)]
pub struct History<T: Scalar> {
    tau: T,
    #[serde(with = "wire::vec_list")]
    samples: Vec<DVector<T>>,
}

impl<T: Scalar> History<T> {
    /// Wraps existing samples; `samples.len()` must be at least 2 (one
    /// subinterval) and all samples must share a dimension.
    pub fn new(tau: T, samples: Vec<DVector<T>>) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::domain("history delay must be strictly positive"));
        }
        if samples.len() < 2 {
            return Err(Error::domain("history needs at least two samples (m >= 1)"));
        }
        let p = samples[0].len();
        if p == 0 {
            return Err(Error::domain("history samples must be nonempty vectors"));
        }
        if samples.iter().any(|s| s.len() != p) {
            return Err(Error::domain("history samples must all share one dimension"));
        }
        Ok(History { tau, samples })
    }

    /// All-zero history with `m` subintervals and channel dimension `p`.
    pub fn zero(tau: T, m: usize, p: usize) -> Result<Self> {
        Self::new(tau, vec![DVector::zeros(p); m + 1])
    }

    /// Constant history repeating `value` at every sample.
    pub fn constant(tau: T, m: usize, value: DVector<T>) -> Result<Self> {
        Self::new(tau, vec![value; m + 1])
    }

    /// Samples `f` at the grid times in `[-tau, 0]`.
    pub fn from_fn(tau: T, m: usize, f: impl Fn(T) -> DVector<T>) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("history needs at least one subinterval"));
        }
        let step = tau / real_of::<T>(m);
        let samples = (0..=m).map(|j| f(-tau + real_of::<T>(j) * step)).collect();
        Self::new(tau, samples)
    }

    /// Number of subintervals.
    pub fn m(&self) -> usize {
        self.samples.len() - 1
    }

    /// Channel dimension.
    pub fn channel_dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    /// Grid spacing `tau / m`.
    pub fn step(&self) -> T {
        self.tau / real_of::<T>(self.m())
    }

    pub fn samples(&self) -> &[DVector<T>] {
        &self.samples
    }

    pub fn sample(&self, j: usize) -> &DVector<T> {
        &self.samples[j]
    }

    /// Time of sample `j`, in `[-tau, 0]`.
    pub fn sample_time(&self, j: usize) -> T {
        -self.tau + real_of::<T>(j) * self.step()
    }
}
