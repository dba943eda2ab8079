//! Filtering recursion over finite mixtures of tilted Dirichlet kernels.
//!
//! A [`Mixture`] `{m ↦ w(m)}` stands for `Σ_m w(m) p_{α+m,σ,J}`. Labels
//! always index the kernel directly: the update step absorbs the observed
//! counts into each label (`n → n + y`), so prediction propagates the dual
//! from the absorbed label.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{check_counts, Moments};
use crate::diffusion::ObservationSet;
use crate::dual::{prune, PrunePolicy, TransitionKernel};
use crate::error::{Error, Result};
use crate::model::MultiIndex;

/// Weights must sum to 1 within this tolerance.
pub const WEIGHT_TOL: f64 = 1e-10;

/// Finite mixture `Σ_m w(m) p_{α+m,σ,J}` with positive weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: BTreeMap<MultiIndex, f64>,
}

impl Mixture {
    pub fn new(components: BTreeMap<MultiIndex, f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("a mixture needs at least one component".into()));
        }
        if let Some((m, w)) = components.iter().find(|(_, &w)| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Numerical(format!("mixture weight {w} for component {m} is not positive")));
        }
        let total: f64 = components.values().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Numerical(format!("mixture weights sum to {total}")));
        }
        Ok(Self { components })
    }

    /// Normalises positive weights; drops exact zeros.
    pub fn from_unnormalized(weights: BTreeMap<MultiIndex, f64>) -> Result<Self> {
        let total: f64 = weights.values().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numerical(format!("mixture weights have total {total}")));
        }
        Self::new(
            weights
                .into_iter()
                .filter(|(_, w)| *w > 0.0)
                .map(|(m, w)| (m, w / total))
                .collect(),
        )
    }

    pub fn single(m: MultiIndex) -> Self {
        Self {
            components: BTreeMap::from([(m, 1.0)]),
        }
    }

    /// The stationary law itself, `{0 ↦ 1}`.
    pub fn prior(num_alleles: usize) -> Self {
        Self::single(MultiIndex::zeros(num_alleles))
    }

    pub fn components(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.components
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.components.iter().map(|(m, &w)| (m, w))
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weight(&self, m: &MultiIndex) -> f64 {
        self.components.get(m).copied().unwrap_or(0.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.components.values().sum()
    }

    /// Mixture mean `Σ_m w(m) E_{p_{α+m}}[X]`.
    pub fn mean(&self, moments: &dyn Moments) -> Result<Vec<f64>> {
        let mut out = vec![0.0; moments.params().shape().total()];
        for (m, w) in self.iter() {
            for (o, v) in out.iter_mut().zip(moments.component_mean(m)?) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    pub fn entries(&self) -> Vec<MixtureEntry> {
        self.iter()
            .map(|(m, w)| MixtureEntry { m: m.clone(), w })
            .collect()
    }
}

/// Serialised form of one mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEntry {
    pub m: MultiIndex,
    pub w: f64,
}

/// Output of a single predict or update step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub mixture: Mixture,
    /// Fraction of mass removed by pruning.
    pub pruned_mass: f64,
    /// Log of the normaliser `Σ_n w(n) d(n, y)` (update steps only; zero otherwise).
    pub log_normalizer: f64,
}

/// Filtering mixture after the first observation: `{y0 ↦ 1}`.
pub fn init_filter(moments: &dyn Moments, y0: &MultiIndex, sizes: &[u64]) -> Result<Mixture> {
    check_counts(moments.params(), y0, sizes)?;
    Ok(Mixture::single(y0.clone()))
}

/// Propagates every component label through the dual over `dt` and averages
/// the arrival distributions by component weight.
pub fn predict_step(
    kernel: &TransitionKernel<'_>,
    filt: &Mixture,
    dt: f64,
    policy: PrunePolicy,
) -> Result<StepOutput> {
    if dt == 0.0 {
        return Ok(StepOutput {
            mixture: filt.clone(),
            pruned_mass: 0.0,
            log_normalizer: 0.0,
        });
    }
    let origins: Vec<(&MultiIndex, f64)> = filt.iter().collect();
    let transitions = origins
        .par_iter()
        .map(|(m, _)| kernel.transition(m, dt))
        .collect::<Result<Vec<_>>>()?;
    let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for ((_, w), t) in origins.iter().zip(&transitions) {
        for (n, p) in &t.mass {
            *acc.entry(n.clone()).or_insert(0.0) += w * p;
        }
    }
    let pruned = prune(&acc, policy)?;
    Ok(StepOutput {
        mixture: Mixture::from_unnormalized(pruned.kept)?,
        pruned_mass: pruned.removed_mass,
        log_normalizer: 0.0,
    })
}

/// Bayes update with counts `y`: weights `∝ w(n) d(n, y)`, labels `n → n + y`.
pub fn update_step(
    moments: &dyn Moments,
    pred: &Mixture,
    y: &MultiIndex,
    sizes: &[u64],
    policy: PrunePolicy,
) -> Result<StepOutput> {
    check_counts(moments.params(), y, sizes)?;
    if y.is_zero() {
        return Ok(StepOutput {
            mixture: pred.clone(),
            pruned_mass: 0.0,
            log_normalizer: 0.0,
        });
    }
    let logs = pred
        .iter()
        .map(|(n, w)| Ok((n.plus(y), w.ln() + moments.log_obs_marginal(n, y)?)))
        .collect::<Result<Vec<_>>>()?;
    let max = logs.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical(format!(
            "observation {y} has zero likelihood under every predictive component"
        )));
    }
    let weights: BTreeMap<MultiIndex, f64> = logs
        .into_iter()
        .map(|(m, l)| (m, (l - max).exp()))
        .collect();
    let total: f64 = weights.values().sum();
    let pruned = prune(&weights, policy)?;
    Ok(StepOutput {
        mixture: Mixture::from_unnormalized(pruned.kept)?,
        pruned_mass: pruned.removed_mass,
        log_normalizer: max + total.ln(),
    })
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub predictive_components: usize,
    pub filtering_components: usize,
    pub predictive_pruned_mass: f64,
    pub filtering_pruned_mass: f64,
    /// `log d`-normaliser of the update, i.e. the log predictive probability of the counts.
    pub log_normalizer: f64,
    /// Largest relative standard error among `C̃` estimates for the filtering labels.
    pub max_rel_std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub index: usize,
    pub time: f64,
    /// Gap to the previous observation time; `None` at the first step.
    pub dt: Option<f64>,
    pub observation: MultiIndex,
    pub sizes: Vec<u64>,
    pub predictive: Mixture,
    pub filtering: Mixture,
    pub diagnostics: StepDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrace {
    pub steps: Vec<FilterStep>,
}

impl FilterTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn filtering(&self, j: usize) -> &Mixture {
        &self.steps[j].filtering
    }
}

/// Runs the full filter: the first step updates the stationary prior with
/// `y(t_0)`, then predict/update alternate over the remaining times.
pub fn run_filter(
    kernel: &TransitionKernel<'_>,
    obs: &ObservationSet,
    policy: PrunePolicy,
) -> Result<FilterTrace> {
    if obs.is_empty() {
        return Err(Error::InvalidInput("no observations to filter".into()));
    }
    let moments = kernel.moments();
    let mut steps: Vec<FilterStep> = Vec::with_capacity(obs.len());
    for j in 0..obs.len() {
        let (pred, dt) = match steps.last() {
            None => (
                StepOutput {
                    mixture: Mixture::prior(moments.params().shape().total()),
                    pruned_mass: 0.0,
                    log_normalizer: 0.0,
                },
                None,
            ),
            Some(prev) => {
                let dt = obs.times[j] - obs.times[j - 1];
                (predict_step(kernel, &prev.filtering, dt, policy)?, Some(dt))
            }
        };
        let filt = update_step(moments, &pred.mixture, &obs.counts[j], &obs.sizes[j], policy)?;
        let max_rel_std_error = filt
            .mixture
            .iter()
            .map(|(m, _)| moments.rel_std_error(m))
            .fold(0.0, f64::max);
        steps.push(FilterStep {
            index: j,
            time: obs.times[j],
            dt,
            observation: obs.counts[j].clone(),
            sizes: obs.sizes[j].clone(),
            diagnostics: StepDiagnostics {
                predictive_components: pred.mixture.len(),
                filtering_components: filt.mixture.len(),
                predictive_pruned_mass: pred.pruned_mass,
                filtering_pruned_mass: filt.pruned_mass,
                log_normalizer: filt.log_normalizer,
                max_rel_std_error,
            },
            predictive: pred.mixture,
            filtering: filt.mixture,
        });
    }
    Ok(FilterTrace { steps })
}
