//! Experiment configuration files (strict JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::DEFAULT_SAMPLES;
use crate::diffusion::{ObservationSet, DEFAULT_POP_SIZE, MIN_POP_SIZE};
use crate::dual::{PrunePolicy, DEFAULT_REPLICATES};
use crate::error::{Error, Result};
use crate::grid::DEFAULT_RESOLUTION;
use crate::model::{LociShape, ModelParams, MultiIndex, SimplexPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Root seed for every random stream of the run.
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    pub observation: ObservationConfig,
    #[serde(default)]
    pub inference: InferenceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Number of alleles per locus.
    pub alleles: Vec<usize>,
    pub alpha: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Full symmetric `K × K` coupling matrix; omitted means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_pop_size")]
    pub pop_size: u64,
    #[serde(default)]
    pub initial: InitialState,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            pop_size: DEFAULT_POP_SIZE,
            initial: InitialState::Stationary,
        }
    }
}

fn default_pop_size() -> u64 {
    DEFAULT_POP_SIZE
}

/// Either the literal string `"stationary"` or a frequency vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "InitialRaw", into = "InitialRaw")]
pub enum InitialState {
    #[default]
    Stationary,
    Point(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InitialRaw {
    Name(String),
    Point(Vec<f64>),
}

impl TryFrom<InitialRaw> for InitialState {
    type Error = String;

    fn try_from(raw: InitialRaw) -> std::result::Result<Self, String> {
        match raw {
            InitialRaw::Name(s) if s == "stationary" => Ok(Self::Stationary),
            InitialRaw::Name(s) => Err(format!("unknown initial state {s:?}; expected \"stationary\" or a vector")),
            InitialRaw::Point(v) => Ok(Self::Point(v)),
        }
    }
}

impl From<InitialState> for InitialRaw {
    fn from(s: InitialState) -> Self {
        match s {
            InitialState::Stationary => Self::Name("stationary".into()),
            InitialState::Point(v) => Self::Point(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationConfig {
    pub times: Vec<f64>,
    /// Per-time, per-locus sample sizes. Derived from `counts` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<Vec<u64>>>,
    /// Observed counts; when absent the data are simulated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<Vec<u32>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceConfig {
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub prune: PrunePolicy,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            mc_samples: DEFAULT_SAMPLES,
            replicates: DEFAULT_REPLICATES,
            prune: PrunePolicy::default(),
            grid: DEFAULT_RESOLUTION,
        }
    }
}

fn default_mc_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_grid() -> usize {
    DEFAULT_RESOLUTION
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        if self.simulation.pop_size < MIN_POP_SIZE {
            return Err(Error::Config(format!(
                "simulation.pop_size must be at least {MIN_POP_SIZE}, got {}",
                self.simulation.pop_size
            )));
        }
        self.initial_point(&params)?;
        if self.inference.mc_samples == 0 {
            return Err(Error::Config("inference.mc_samples must be positive".into()));
        }
        if self.inference.replicates == 0 {
            return Err(Error::Config("inference.replicates must be positive".into()));
        }
        if self.inference.grid == 0 {
            return Err(Error::Config("inference.grid must be positive".into()));
        }
        let obs = &self.observation;
        if obs.times.is_empty() {
            return Err(Error::Config("observation.times is empty".into()));
        }
        if obs.sizes.is_none() && obs.counts.is_none() {
            return Err(Error::Config("observation needs sizes, counts, or both".into()));
        }
        if let Some(sizes) = &obs.sizes {
            if sizes.len() != obs.times.len() {
                return Err(Error::Config(format!(
                    "observation.sizes has {} rows for {} times",
                    sizes.len(),
                    obs.times.len()
                )));
            }
            if let Some(row) = sizes.iter().find(|r| r.len() != params.shape().num_loci()) {
                return Err(Error::Config(format!(
                    "observation.sizes row {row:?} needs one entry per locus ({})",
                    params.shape().num_loci()
                )));
            }
        }
        if obs.counts.is_some() {
            self.observations(&params).map_err(|e| Error::Config(format!("observation: {e}")))?;
        } else {
            // only the times can be checked before counts are simulated
            let zeros = obs.times.iter().map(|_| MultiIndex::zeros(params.shape().total())).collect();
            ObservationSet::new(params.shape(), obs.times.clone(), zeros)
                .map_err(|e| Error::Config(format!("observation: {e}")))?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let shape = LociShape::new(m.alleles.clone()).map_err(|e| Error::Config(format!("model.alleles: {e}")))?;
        let k = shape.total();
        let coupling = match &m.coupling {
            None => vec![0.0; k * k],
            Some(rows) => {
                if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                    return Err(Error::Config(format!("model.coupling must be a {k}x{k} matrix")));
                }
                rows.concat()
            }
        };
        ModelParams::new(shape, m.alpha.clone(), m.sigma.clone(), coupling)
            .map_err(|e| Error::Config(format!("model: {e}")))
    }

    pub fn initial_point(&self, params: &ModelParams) -> Result<Option<SimplexPoint>> {
        match &self.simulation.initial {
            InitialState::Stationary => Ok(None),
            InitialState::Point(v) => SimplexPoint::new(params.shape(), v.clone())
                .map(Some)
                .map_err(|e| Error::Config(format!("simulation.initial: {e}"))),
        }
    }

    /// The configured data, if counts are given.
    pub fn observations(&self, params: &ModelParams) -> Result<ObservationSet> {
        let obs = &self.observation;
        let counts: Vec<MultiIndex> = obs
            .counts
            .as_ref()
            .ok_or_else(|| Error::Config("observation.counts is not set".into()))?
            .iter()
            .map(|c| MultiIndex::new(c.clone()))
            .collect();
        match &obs.sizes {
            Some(sizes) => ObservationSet::with_sizes(params.shape(), obs.times.clone(), sizes.clone(), counts),
            None => ObservationSet::new(params.shape(), obs.times.clone(), counts),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_json(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
