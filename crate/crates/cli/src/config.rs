//! Experiment configuration: one JSON file describes a run completely.
//!
//! Every struct rejects unknown keys so a typo fails loudly instead of
//! silently running a different experiment, and every field either has a
//! default or is required, so `parse(serialize(c)) == c` holds exactly.

use std::collections::BTreeMap;
use std::path::PathBuf;

use delaykit::diagnostics::FitSource;
use delaykit::solver::SolverConfig;
use serde::{Deserialize, Serialize};

/// A full experiment description.
///
/// The gain is set once, at the top level; it is injected into the model
/// parameters (catalog models) or overrides the stored gain (system files),
/// so a config never carries two competing values of `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub solver: SolverConfig<f64>,
    /// Gain, single value or sweep grid.
    pub k: KSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSpec>,
    #[serde(default)]
    pub initial: InitialData,
    /// Seed for the initial-data draw (not the model-structure seed, which
    /// is a model parameter).
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSpec>,
    /// Worker cap for sweep rows; absent means one worker per core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// Where the system comes from: the built-in catalog or a serialized system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Catalog(CatalogModel),
    File(SystemFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogModel {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    /// Path to a JSON file holding a serialized system.
    pub file: PathBuf,
}

impl ModelSpec {
    pub fn catalog(name: &str, params: BTreeMap<String, f64>) -> Self {
        ModelSpec::Catalog(CatalogModel { name: name.to_string(), params })
    }

    /// Display name for summaries.
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Catalog(c) => c.name.clone(),
            ModelSpec::File(f) => f.file.display().to_string(),
        }
    }
}

/// Single gain or sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    One(f64),
    Grid(Vec<f64>),
}

impl KSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            KSpec::One(k) => vec![*k],
            KSpec::Grid(ks) => ks.clone(),
        }
    }

    /// The single gain, or an error for commands that cannot sweep.
    pub fn single(&self) -> Result<f64, String> {
        match self {
            KSpec::One(k) => Ok(*k),
            KSpec::Grid(ks) if ks.len() == 1 => Ok(ks[0]),
            KSpec::Grid(_) => {
                Err("key k holds a grid; this command takes a single gain (use sweep)".to_string())
            }
        }
    }
}

/// Certificate inputs: constants given outright, or estimated from the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateSpec {
    /// Bounded-feedback route with explicit constants.
    Given(GivenConstants),
    /// Observation-channel route with explicit admissibility constants.
    GivenUnbounded(GivenUnbounded),
    /// Estimate the semigroup constants and the feedback norm from the model.
    Estimate(EstimateSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GivenConstants {
    pub m: f64,
    pub omega: f64,
    pub bnorm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GivenUnbounded {
    pub m: f64,
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EstimateSpec {
    /// Upper end of the sampling window for the semigroup sup.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Fraction of the spectral abscissa given up to keep the sup finite.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_t_max() -> f64 {
    50.0
}
fn default_samples() -> usize {
    160
}
fn default_margin() -> f64 {
    0.05
}

impl Default for EstimateSpec {
    fn default() -> Self {
        EstimateSpec {
            t_max: default_t_max(),
            samples: default_samples(),
            margin: default_margin(),
        }
    }
}

/// How the initial state and the trailing channel history are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// State of all ones; history constantly equal to its observation.
    Ones,
    /// Seeded draw normalized in the state geometry; history constantly
    /// equal to its observation.
    RandomUnit,
    /// Seeded draw as above, but the history is zero.
    RandomZeroHistory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct InitialData {
    pub kind: InitialKind,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData { kind: InitialKind::RandomUnit, scale: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutputPaths {
    /// Trajectory CSV (simulate) or row CSV (sweep).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Summary or record JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    /// Include state columns in the trajectory CSV.
    #[serde(default)]
    pub states: bool,
}

/// Decay-fit controls; any unset field gets the command default
/// (full horizon, one bucket per delay interval, norm data).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<FitSource>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    #[cfg(test)]
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }
}
