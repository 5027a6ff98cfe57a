//! Recorded solution of a simulation run.
//!
//! Solvers march on a uniform grid and record every `record_every`-th step.
//! Recorded times are always `step_index * dt` computed directly, never
//! accumulated, so reruns reproduce them bit-for-bit. A run that hits the
//! blow-up guard keeps its valid prefix and sets `diverged`; downstream
//! consumers treat such trajectories as first-class results.

use std::io::{self, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::wire;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned")
)]
pub struct Trajectory<T: Scalar> {
    /// Recorded sample times, strictly increasing, uniformly spaced by
    /// `dt * record_every`.
    pub times: Vec<T>,
    /// State vectors at the recorded times.
    #[serde(with = "wire::vec_list")]
    pub states: Vec<DVector<T>>,
    /// Model-norm of each recorded state.
    pub norms: Vec<T>,
    /// Energy functional values, filled in by the diagnostics when requested.
    pub energies: Option<Vec<T>>,
    /// Delayed-channel observation at each recorded time.
    #[serde(with = "wire::vec_list")]
    pub outputs: Vec<DVector<T>>,
    /// Underlying solver step.
    pub dt: T,
    /// Recording stride in solver steps.
    pub record_every: usize,
    /// True when the run stopped at the blow-up guard; the stored samples
    /// are the valid prefix.
    pub diverged: bool,
}

impl<T: Scalar> Trajectory<T> {
    /// Number of recorded samples.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Last time that holds a valid sample.
    pub fn last_time(&self) -> Option<T> {
        self.times.last().copied()
    }

    /// Writes the run as CSV: `t,norm[,energy][,x0..]`. Energy appears when
    /// the trajectory carries energies; state components only when
    /// `with_states` is set.
    pub fn write_csv<W: Write>(&self, w: &mut W, with_states: bool) -> io::Result<()> {
        let dim = self.states.first().map_or(0, |s| s.len());
        write!(w, "t,norm")?;
        if self.energies.is_some() {
            write!(w, ",energy")?;
        }
        if with_states {
            for i in 0..dim {
                write!(w, ",x{i}")?;
            }
        }
        writeln!(w)?;
        for i in 0..self.len() {
            write!(w, "{},{}", self.times[i], self.norms[i])?;
            if let Some(es) = &self.energies {
                write!(w, ",{}", es[i])?;
            }
            if with_states {
                for x in self.states[i].iter() {
                    write!(w, ",{x}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory<f64> {
        Trajectory {
            times: vec![0.0, 0.5, 1.0],
            states: vec![
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.5, 0.1]),
                DVector::from_vec(vec![0.25, 0.05]),
            ],
            norms: vec![1.0, 0.509901951359278, 0.2549509756796392],
            energies: None,
            outputs: vec![DVector::zeros(1), DVector::zeros(1), DVector::zeros(1)],
            dt: 0.5,
            record_every: 1,
            diverged: false,
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,norm");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1"));
    }

    #[test]
    fn csv_state_columns_are_flag_gated() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().ends_with("x0,x1"));
        let mut buf2 = Vec::new();
        sample().write_csv(&mut buf2, false).unwrap();
        assert!(!String::from_utf8(buf2).unwrap().contains("x0"));
    }

    #[test]
    fn csv_energy_column_appears_when_present() {
        let mut t = sample();
        t.energies = Some(vec![2.0, 1.0, 0.5]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,norm,energy");
        assert!(text.lines().nth(2).unwrap().ends_with(",1"));
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        let text = serde_json::to_string(&t).unwrap();
        let back: Trajectory<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back.times, t.times);
        assert_eq!(back.states[1], t.states[1]);
        assert!(!back.diverged);
    }
}
