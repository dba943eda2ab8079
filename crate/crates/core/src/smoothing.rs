//! Marginal smoothing: backward cost-to-go messages combined with the
//! forward filtering mixtures.
//!
//! The message at time `t_i` is `Σ_m ω(m) h(x, m)`, proportional to the
//! likelihood of all later observations given `X(t_i) = x`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{check_counts, Moments};
use crate::diffusion::ObservationSet;
use crate::dual::{prune, PrunePolicy, TransitionKernel};
use crate::error::{Error, Result};
use crate::filtering::{FilterTrace, Mixture, WEIGHT_TOL};
use crate::model::MultiIndex;

/// Backward message, normalised to sum to 1; `log_scale` is the log of the
/// dropped normaliser accumulated so far.
#[derive(Debug, Clone, PartialEq)]
pub struct CostToGo {
    pub weights: BTreeMap<MultiIndex, f64>,
    pub log_scale: f64,
    pub pruned_mass: f64,
}

impl CostToGo {
    fn from_unnormalized(weights: BTreeMap<MultiIndex, f64>, log_scale: f64, pruned_mass: f64) -> Result<Self> {
        let total: f64 = weights.values().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numerical(format!("cost-to-go weights have total {total}")));
        }
        Ok(Self {
            weights: weights.into_iter().map(|(m, w)| (m, w / total)).collect(),
            log_scale: log_scale + total.ln(),
            pruned_mass,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Message for the last observation, seen from the previous time: the dual
/// started at `y_last` and run over `dt_last`.
pub fn init_cost_to_go(kernel: &TransitionKernel<'_>, y_last: &MultiIndex, dt_last: f64) -> Result<CostToGo> {
    kernel.moments().params().check_index(y_last)?;
    let t = kernel.transition(y_last, dt_last)?;
    CostToGo::from_unnormalized(t.mass.clone(), 0.0, 0.0)
}

/// One backward step: weight each label by `d(n, y)`, shift it to `n + y`,
/// then propagate through the dual over `dt`.
pub fn backward_step(
    kernel: &TransitionKernel<'_>,
    next: &CostToGo,
    y: &MultiIndex,
    sizes: &[u64],
    dt: f64,
    policy: PrunePolicy,
) -> Result<CostToGo> {
    let moments = kernel.moments();
    check_counts(moments.params(), y, sizes)?;
    let logs = next
        .weights
        .iter()
        .map(|(n, w)| Ok((n.plus(y), w.ln() + moments.log_obs_marginal(n, y)?)))
        .collect::<Result<Vec<_>>>()?;
    let max = logs.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical(format!("observation {y} has zero likelihood under every message label")));
    }
    let shifted: Vec<(MultiIndex, f64)> = logs.into_iter().map(|(m, l)| (m, (l - max).exp())).collect();
    let transitions = shifted
        .par_iter()
        .map(|(m, _)| kernel.transition(m, dt))
        .collect::<Result<Vec<_>>>()?;
    let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for ((_, w), t) in shifted.iter().zip(&transitions) {
        for (target, p) in &t.mass {
            *acc.entry(target.clone()).or_insert(0.0) += w * p;
        }
    }
    let pruned = prune(&acc, policy)?;
    CostToGo::from_unnormalized(pruned.kept, next.log_scale + max, pruned.removed_mass)
}

/// Two-index mixture `Σ w(m,n) p_{α+m+n,σ,J}`; `m` labels the backward
/// message and `n` the filtering component.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingMixture {
    components: BTreeMap<(MultiIndex, MultiIndex), f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingEntry {
    pub m: MultiIndex,
    pub n: MultiIndex,
    pub w: f64,
}

impl SmoothingMixture {
    pub fn new(components: BTreeMap<(MultiIndex, MultiIndex), f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("a smoothing mixture needs at least one component".into()));
        }
        if components.values().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Numerical("smoothing weights must be positive".into()));
        }
        let total: f64 = components.values().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Numerical(format!("smoothing weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &BTreeMap<(MultiIndex, MultiIndex), f64> {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.values().sum()
    }

    /// Merges pairs by kernel label `m + n`.
    pub fn collapse(&self) -> Result<Mixture> {
        let mut out: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for ((m, n), w) in &self.components {
            *out.entry(m.plus(n)).or_insert(0.0) += w;
        }
        Mixture::from_unnormalized(out)
    }

    pub fn mean(&self, moments: &dyn Moments) -> Result<Vec<f64>> {
        self.collapse()?.mean(moments)
    }

    pub fn entries(&self) -> Vec<SmoothingEntry> {
        self.components
            .iter()
            .map(|((m, n), &w)| SmoothingEntry {
                m: m.clone(),
                n: n.clone(),
                w,
            })
            .collect()
    }
}

/// Weights `∝ C_{m,n} ω(m) ĉ(n)` over the product of both supports.
pub fn combine(
    moments: &dyn Moments,
    filt: &Mixture,
    message: &CostToGo,
    policy: PrunePolicy,
) -> Result<SmoothingMixture> {
    let pairs: Vec<(&MultiIndex, f64, &MultiIndex, f64)> = message
        .weights
        .iter()
        .flat_map(|(m, &wm)| filt.iter().map(move |(n, wn)| (m, wm, n, wn)))
        .collect();
    let logs = pairs
        .par_iter()
        .map(|(m, wm, n, wn)| Ok(wm.ln() + wn.ln() + moments.log_combination_const(m, n)?))
        .collect::<Result<Vec<_>>>()?;
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical("smoothing combination has no positive weight".into()));
    }
    let raw: BTreeMap<(MultiIndex, MultiIndex), f64> = pairs
        .iter()
        .zip(&logs)
        .map(|((m, _, n, _), l)| (((*m).clone(), (*n).clone()), (l - max).exp()))
        .collect();
    let total: f64 = raw.values().sum();
    let normalized = raw.into_iter().map(|(k, w)| (k, w / total)).collect();
    let pruned = prune(&normalized, policy)?;
    SmoothingMixture::new(pruned.kept)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingStep {
    pub index: usize,
    pub time: f64,
    pub message: CostToGo,
    pub mixture: SmoothingMixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingTrace {
    /// One entry per observation time except the last, in time order.
    pub steps: Vec<SmoothingStep>,
}

impl SmoothingTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Backward pass from the last observation, then combination with the
/// filtering mixture at every earlier time.
pub fn run_smoother(
    kernel: &TransitionKernel<'_>,
    obs: &ObservationSet,
    trace: &FilterTrace,
    policy: PrunePolicy,
) -> Result<SmoothingTrace> {
    if obs.len() < 2 {
        return Err(Error::InvalidInput("smoothing needs at least two observation times".into()));
    }
    if trace.len() != obs.len()
        || trace
            .steps
            .iter()
            .zip(obs.times.iter().zip(&obs.counts))
            .any(|(s, (t, y))| s.time != *t || &s.observation != y)
    {
        return Err(Error::InvalidInput("filter trace does not match the observations".into()));
    }
    let moments = kernel.moments();
    let last = obs.len() - 1;
    let mut message = init_cost_to_go(kernel, &obs.counts[last], obs.times[last] - obs.times[last - 1])?;
    let mut steps = Vec::with_capacity(last);
    for i in (0..last).rev() {
        if i < last - 1 {
            message = backward_step(
                kernel,
                &message,
                &obs.counts[i + 1],
                &obs.sizes[i + 1],
                obs.times[i + 1] - obs.times[i],
                policy,
            )?;
        }
        let mixture = combine(moments, trace.filtering(i), &message, policy)?;
        steps.push(SmoothingStep {
            index: i,
            time: obs.times[i],
            message: message.clone(),
            mixture,
        });
    }
    steps.reverse();
    Ok(SmoothingTrace { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ConstantCache;
    use crate::model::ModelParams;
    use approx::assert_relative_eq;

    fn idx(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn cache() -> ConstantCache {
        let p = ModelParams::two_locus_diagonal([1.8, 1.4, 1.9, 1.7], [0.5, 0.0, 0.0, 1.2], 0.9, 1.8).unwrap();
        ConstantCache::new(p, 5000, 3).unwrap()
    }

    #[test]
    fn zero_gap_init_is_point_mass() {
        let c = cache();
        let k = TransitionKernel::new(&c, 50, 1);
        let y = idx(&[1, 2, 0, 3]);
        let w = init_cost_to_go(&k, &y, 0.0).unwrap();
        assert_eq!(w.weights, BTreeMap::from([(y, 1.0)]));
    }

    #[test]
    fn zero_gap_backward_step_shifts_label() {
        let c = cache();
        let k = TransitionKernel::new(&c, 50, 1);
        let next = CostToGo::from_unnormalized(BTreeMap::from([(idx(&[1, 0, 0, 1]), 1.0)]), 0.0, 0.0).unwrap();
        let y = idx(&[0, 2, 1, 1]);
        let out = backward_step(&k, &next, &y, &[2, 2], 0.0, PrunePolicy::default()).unwrap();
        assert_eq!(out.weights, BTreeMap::from([(idx(&[1, 2, 1, 2]), 1.0)]));
        assert_relative_eq!(
            out.log_scale,
            c.log_obs_marginal(&idx(&[1, 0, 0, 1]), &y).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn trivial_future_reproduces_filter() {
        let c = cache();
        let filt = Mixture::from_unnormalized(BTreeMap::from([
            (idx(&[1, 0, 2, 0]), 0.3),
            (idx(&[0, 1, 1, 1]), 0.7),
        ]))
        .unwrap();
        let message = CostToGo::from_unnormalized(BTreeMap::from([(idx(&[0, 0, 0, 0]), 1.0)]), 0.0, 0.0).unwrap();
        let s = combine(&c, &filt, &message, PrunePolicy::None).unwrap();
        assert_eq!(s.collapse().unwrap(), filt);
    }

    #[test]
    fn single_components_combine_to_one_pair() {
        let c = cache();
        let filt = Mixture::single(idx(&[1, 0, 2, 0]));
        let message = CostToGo::from_unnormalized(BTreeMap::from([(idx(&[0, 1, 0, 1]), 5.0)]), 0.0, 0.0).unwrap();
        let s = combine(&c, &filt, &message, PrunePolicy::None).unwrap();
        assert_eq!(s.entries(), vec![SmoothingEntry { m: idx(&[0, 1, 0, 1]), n: idx(&[1, 0, 2, 0]), w: 1.0 }]);
    }

    #[test]
    fn smoother_rejects_mismatched_trace() {
        let c = cache();
        let k = TransitionKernel::new(&c, 50, 1);
        let shape = c.params().shape().clone();
        let obs = ObservationSet::new(&shape, vec![0.0, 0.1], vec![idx(&[1, 1, 2, 0]), idx(&[2, 0, 1, 1])]).unwrap();
        let other = ObservationSet::new(&shape, vec![0.0, 0.1], vec![idx(&[1, 1, 2, 0]), idx(&[0, 2, 1, 1])]).unwrap();
        let trace = crate::filtering::run_filter(&k, &other, PrunePolicy::default()).unwrap();
        assert!(run_smoother(&k, &obs, &trace, PrunePolicy::default()).is_err());
        let single = ObservationSet::new(&shape, vec![0.0], vec![idx(&[1, 1, 2, 0])]).unwrap();
        let t1 = crate::filtering::run_filter(&k, &single, PrunePolicy::default()).unwrap();
        assert!(run_smoother(&k, &single, &t1, PrunePolicy::default()).is_err());
    }
}
