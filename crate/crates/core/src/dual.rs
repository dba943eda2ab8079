//! The dual pure-jump process on `ℕ^K`.
//!
//! From a state `m ≠ 0` the process jumps by coalescence (`m − e_i`),
//! mutation (`m − e_i + e_j`, same locus), branching (`m + e_j`) or double
//! branching (`m + e_j^{(l)} + e_h^{(r)}`, `l < r`). Each rate is a
//! nonnegative coefficient from the expansion of the generator applied to
//! `x^m`, times `k(target)/k(m)` looked up through a shared [`Moments`]
//! source. Selection terms admit many such expansions because each locus
//! sums to one; the one used here has the smallest total rate. Transition probabilities are estimated from
//! Gillespie replicates and summarised as finite probability maps.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::Moments;
use crate::error::{Error, Result};
use crate::model::{MultiIndex, SimplexPoint};
use crate::seed::StreamKey;

/// Default replicate count per origin state.
pub const DEFAULT_REPLICATES: usize = 10_000;

/// Branching coefficients below this fraction of the largest one are rounding noise.
const RATE_TOL: f64 = 1e-12;

/// Maximum fraction of replicates allowed to hit the runaway bound.
pub const MAX_ABORT_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKind {
    Coalescence,
    Mutation,
    Branching,
    DoubleBranching,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub target: MultiIndex,
    pub rate: f64,
    pub kind: JumpKind,
}

/// All jumps out of one state, rates strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRateTable {
    pub origin: MultiIndex,
    pub entries: Vec<Jump>,
    pub total_rate: f64,
}

/// Combinatorial part of every jump out of `m` (the rate without its
/// `k(target)/k(m)` factor). Zero coefficients are omitted.
pub fn jump_coefficients(moments: &dyn Moments, m: &MultiIndex) -> Result<Vec<(MultiIndex, f64, JumpKind)>> {
    let params = moments.params();
    params.check_index(m)?;
    if m.is_zero() {
        return Err(Error::InvalidInput(
            "the dual process has no jumps out of the zero state".into(),
        ));
    }
    let shape = params.shape();
    let e = m.as_slice();
    let totals = m.locus_totals(shape);
    let mut out = Vec::new();

    for range in shape.ranges() {
        for i in range.clone() {
            let mi = f64::from(e[i]);
            if e[i] >= 2 {
                let target = m.decremented(i).expect("m_i >= 2");
                out.push((target, mi * (mi - 1.0) / 2.0, JumpKind::Coalescence));
            }
            if e[i] >= 1 {
                let rate = mi * params.alpha()[i] / 2.0;
                let down = m.decremented(i).expect("m_i >= 1");
                for j in range.clone().filter(|&j| j != i) {
                    if rate > 0.0 {
                        out.push((down.incremented(j), rate, JumpKind::Mutation));
                    }
                }
            }
        }
    }

    // Selection part of the generator on x^m, divided by x^m:
    //   const + Σ_h lin[h] x_h + Σ_{l<r} Σ_{k∈l, h∈r} −(|m^l|+|m^r|) J_kh x_k x_h.
    // Linear terms of locus l are folded into one pair containing l, each pair
    // polynomial is written on its corners x_j x_h, shifted so the smallest
    // corner is zero, and row/column minima are peeled off as single branching.
    let lin: Vec<f64> = (0..m.len())
        .map(|h| {
            let r = shape.locus_of(h);
            let across: f64 = (0..m.len())
                .filter(|&i| shape.locus_of(i) != r && e[i] > 0)
                .map(|i| f64::from(e[i]) * params.coupling(i, h))
                .sum();
            across - totals[r] as f64 * params.sigma()[h]
        })
        .collect();
    let mut single = vec![0.0; m.len()];
    let mut double = Vec::new();
    let loci = shape.num_loci();
    if loci == 1 {
        let min = lin.iter().copied().fold(f64::INFINITY, f64::min);
        for (s, v) in single.iter_mut().zip(&lin) {
            *s = v - min;
        }
    }
    let host = |l: usize| if l + 1 < loci { (l, l + 1) } else { (l - 1, l) };
    for l in 0..loci {
        for r in l + 1..loci {
            let (rows, cols) = (shape.range(l), shape.range(r));
            let size = (totals[l] + totals[r]) as f64;
            let with_rows = host(l) == (l, r);
            let with_cols = host(r) == (l, r);
            let mut corner: Vec<Vec<f64>> = rows
                .clone()
                .map(|j| {
                    cols.clone()
                        .map(|h| {
                            let mut v = -size * params.coupling(j, h);
                            if with_rows {
                                v += lin[j];
                            }
                            if with_cols {
                                v += lin[h];
                            }
                            v
                        })
                        .collect()
                })
                .collect();
            let min = corner.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            for (a, row) in rows.clone().zip(corner.iter_mut()) {
                row.iter_mut().for_each(|v| *v -= min);
                let t = row.iter().copied().fold(f64::INFINITY, f64::min);
                row.iter_mut().for_each(|v| *v -= t);
                single[a] += t;
            }
            for (c, b) in cols.clone().enumerate() {
                let u = corner.iter().map(|row| row[c]).fold(f64::INFINITY, f64::min);
                corner.iter_mut().for_each(|row| row[c] -= u);
                single[b] += u;
            }
            for (a, row) in rows.zip(&corner) {
                for (b, &v) in cols.clone().zip(row) {
                    double.push((a, b, v));
                }
            }
        }
    }
    let scale = single
        .iter()
        .chain(double.iter().map(|(_, _, v)| v))
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let negligible = |v: f64| v <= RATE_TOL * scale;
    for (j, &rate) in single.iter().enumerate() {
        if !negligible(rate) {
            out.push((m.incremented(j), rate, JumpKind::Branching));
        }
    }
    for (j, h, rate) in double {
        if !negligible(rate) {
            out.push((m.incremented(j).incremented(h), rate, JumpKind::DoubleBranching));
        }
    }
    Ok(out)
}

/// Jump rates out of `m`, with `k`-ratios from `moments`.
pub fn jump_rates(moments: &dyn Moments, m: &MultiIndex) -> Result<JumpRateTable> {
    let coefficients = jump_coefficients(moments, m)?;
    let base = moments.log_c_tilde(m)?;
    let mut entries = Vec::with_capacity(coefficients.len());
    let mut total_rate = 0.0;
    for (target, coef, kind) in coefficients {
        let rate = coef * (moments.log_c_tilde(&target)? - base).exp();
        if !rate.is_finite() {
            return Err(Error::Numerical(format!("non-finite jump rate {m} -> {target}")));
        }
        if rate > 0.0 {
            total_rate += rate;
            entries.push(Jump { target, rate, kind });
        }
    }
    Ok(JumpRateTable {
        origin: m.clone(),
        entries,
        total_rate,
    })
}

/// Duality function `h(x, m) = x^m / k(m)`.
pub fn duality_h(moments: &dyn Moments, x: &SimplexPoint, m: &MultiIndex) -> Result<f64> {
    moments.params().check_point(x)?;
    Ok(x.monomial(m) / moments.k_const(m)?)
}

/// Bound on `|m|` along a path: `factor · |m0| + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunawayBound {
    pub factor: u64,
    pub offset: u64,
}

impl Default for RunawayBound {
    fn default() -> Self {
        Self {
            factor: 10,
            offset: 100,
        }
    }
}

impl RunawayBound {
    pub fn limit(&self, m0: &MultiIndex) -> u64 {
        self.factor * m0.total() + self.offset
    }
}

/// Gillespie simulator for the dual process, with memoised rate tables.
pub struct DualProcess<'a> {
    moments: &'a dyn Moments,
    runaway: RunawayBound,
    rates: RwLock<HashMap<MultiIndex, Arc<JumpRateTable>>>,
}

impl fmt::Debug for DualProcess<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DualProcess")
            .field("runaway", &self.runaway)
            .finish_non_exhaustive()
    }
}

impl<'a> DualProcess<'a> {
    pub fn new(moments: &'a dyn Moments) -> Self {
        Self::with_runaway(moments, RunawayBound::default())
    }

    pub fn with_runaway(moments: &'a dyn Moments, runaway: RunawayBound) -> Self {
        Self {
            moments,
            runaway,
            rates: RwLock::new(HashMap::new()),
        }
    }

    pub fn moments(&self) -> &'a dyn Moments {
        self.moments
    }

    /// Number of states whose rate table has been built.
    pub fn cached_states(&self) -> usize {
        self.rates.read().expect("rate table poisoned").len()
    }

    pub fn rate_table(&self, m: &MultiIndex) -> Result<Arc<JumpRateTable>> {
        if let Some(t) = self.rates.read().expect("rate table poisoned").get(m) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(jump_rates(self.moments, m)?);
        self.rates
            .write()
            .expect("rate table poisoned")
            .insert(m.clone(), Arc::clone(&table));
        Ok(table)
    }

    /// `M(dt)` given `M(0) = m0`. The zero state is absorbing.
    pub fn simulate<R: Rng + ?Sized>(&self, m0: &MultiIndex, dt: f64, rng: &mut R) -> Result<MultiIndex> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time gap {dt} must be finite and nonnegative")));
        }
        self.moments.params().check_index(m0)?;
        if m0.is_zero() {
            return Ok(m0.clone());
        }
        let limit = self.runaway.limit(m0);
        let mut m = m0.clone();
        let mut remaining = dt;
        loop {
            let table = self.rate_table(&m)?;
            if table.total_rate <= 0.0 {
                return Ok(m);
            }
            let hold: f64 = Exp1.sample(rng);
            let hold = hold / table.total_rate;
            if hold > remaining {
                return Ok(m);
            }
            remaining -= hold;
            let mut u = rng.random::<f64>() * table.total_rate;
            let mut next = &table.entries[table.entries.len() - 1];
            for jump in &table.entries {
                if u < jump.rate {
                    next = jump;
                    break;
                }
                u -= jump.rate;
            }
            m = next.target.clone();
            if m.total() > limit {
                return Err(Error::Runaway(format!(
                    "|m| reached {} (> {limit}) starting from {m0}",
                    m.total()
                )));
            }
        }
    }
}

/// One Gillespie path from `m0` over `dt`, seeded deterministically.
pub fn simulate_dual_path(process: &DualProcess<'_>, m0: &MultiIndex, dt: f64, seed: u64) -> Result<MultiIndex> {
    let mut rng = StreamKey::new(seed, &format!("dual-path/{m0}")).rng(0);
    process.simulate(m0, dt, &mut rng)
}

/// Empirical approximation of `p_{m0,·}(dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTransition {
    pub origin: MultiIndex,
    pub dt: f64,
    pub replicates: usize,
    /// Replicates discarded by the runaway guard.
    pub aborted: usize,
    pub mass: BTreeMap<MultiIndex, f64>,
}

impl EmpiricalTransition {
    pub fn point_mass(origin: &MultiIndex, dt: f64, replicates: usize) -> Self {
        Self {
            origin: origin.clone(),
            dt,
            replicates,
            aborted: 0,
            mass: BTreeMap::from([(origin.clone(), 1.0)]),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }
}

/// Runs `replicates` independent paths from `m0`; replicate `r` draws from
/// stream `r` of `dual/<dt>/<m0>`.
pub fn estimate_transition(
    process: &DualProcess<'_>,
    m0: &MultiIndex,
    dt: f64,
    replicates: usize,
    seed: u64,
) -> Result<EmpiricalTransition> {
    if replicates == 0 {
        return Err(Error::InvalidInput("at least one replicate is required".into()));
    }
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("time gap {dt} must be finite and nonnegative")));
    }
    process.moments().params().check_index(m0)?;
    if dt == 0.0 || m0.is_zero() {
        return Ok(EmpiricalTransition::point_mass(m0, dt, replicates));
    }
    let key = StreamKey::new(seed, &format!("dual/{:016x}/{m0}", dt.to_bits()));
    let arrivals: Vec<Result<MultiIndex>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| process.simulate(m0, dt, &mut key.rng(r)))
        .collect();

    let mut counts: BTreeMap<MultiIndex, u64> = BTreeMap::new();
    let mut aborted = 0usize;
    let mut last_runaway = None;
    for a in arrivals {
        match a {
            Ok(m) => *counts.entry(m).or_insert(0) += 1,
            Err(Error::Runaway(msg)) => {
                aborted += 1;
                last_runaway = Some(msg);
            }
            Err(e) => return Err(e),
        }
    }
    if aborted as f64 > MAX_ABORT_FRACTION * replicates as f64 {
        return Err(Error::Runaway(format!(
            "{aborted} of {replicates} replicates from {m0} over dt={dt} exceeded the bound ({})",
            last_runaway.unwrap_or_default()
        )));
    }
    let completed = (replicates - aborted) as f64;
    Ok(EmpiricalTransition {
        origin: m0.clone(),
        dt,
        replicates,
        aborted,
        mass: counts
            .into_iter()
            .map(|(m, c)| (m, c as f64 / completed))
            .collect(),
    })
}

/// Transition estimator shared by a filtering/smoothing run: fixed replicate
/// count and root seed, memoised by `(origin, dt)`.
///
/// The seed of each estimate depends only on the root seed, `dt` and the
/// origin, so a transition requested twice (forward and backward pass, or
/// two steps) is simulated once and is identical in both places.
pub struct TransitionKernel<'a> {
    process: DualProcess<'a>,
    replicates: usize,
    seed: u64,
    memo: RwLock<HashMap<(MultiIndex, u64), Arc<EmpiricalTransition>>>,
}

impl fmt::Debug for TransitionKernel<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionKernel")
            .field("replicates", &self.replicates)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl<'a> TransitionKernel<'a> {
    pub fn new(moments: &'a dyn Moments, replicates: usize, seed: u64) -> Self {
        Self::with_process(DualProcess::new(moments), replicates, seed)
    }

    pub fn with_process(process: DualProcess<'a>, replicates: usize, seed: u64) -> Self {
        Self {
            process,
            replicates,
            seed,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn moments(&self) -> &'a dyn Moments {
        self.process.moments()
    }

    pub fn process(&self) -> &DualProcess<'a> {
        &self.process
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn transition(&self, origin: &MultiIndex, dt: f64) -> Result<Arc<EmpiricalTransition>> {
        let key = (origin.clone(), dt.to_bits());
        if let Some(t) = self.memo.read().expect("transition memo poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let t = Arc::new(estimate_transition(
            &self.process,
            origin,
            dt,
            self.replicates,
            self.seed,
        )?);
        self.memo
            .write()
            .expect("transition memo poisoned")
            .insert(key, Arc::clone(&t));
        Ok(t)
    }

    /// Replicates aborted by the runaway guard across all memoised estimates.
    pub fn aborted_replicates(&self) -> usize {
        self.memo
            .read()
            .expect("transition memo poisoned")
            .values()
            .map(|t| t.aborted)
            .sum()
    }
}

/// Pruning rule for finite probability maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrunePolicy {
    /// Keep everything.
    None,
    /// Drop entries with probability below the threshold.
    Threshold(f64),
    /// Keep the largest entries until their cumulative mass reaches the level.
    TopMass(f64),
}

impl Default for PrunePolicy {
    fn default() -> Self {
        PrunePolicy::TopMass(0.999)
    }
}

impl fmt::Display for PrunePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrunePolicy::None => f.write_str("none"),
            PrunePolicy::Threshold(e) => write!(f, "threshold:{e}"),
            PrunePolicy::TopMass(t) => write!(f, "topmass:{t}"),
        }
    }
}

impl FromStr for PrunePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad prune policy {s:?}; expected threshold:EPS, topmass:TAU or none"));
        if s == "none" {
            return Ok(PrunePolicy::None);
        }
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = value.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "threshold" if (0.0..1.0).contains(&v) => Ok(PrunePolicy::Threshold(v)),
            "topmass" if v > 0.0 && v <= 1.0 => Ok(PrunePolicy::TopMass(v)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for PrunePolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PrunePolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Result of [`prune`]: the renormalised map and the fraction of mass removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Pruned<K> {
    pub kept: BTreeMap<K, f64>,
    pub removed_mass: f64,
}

/// Applies `policy` to a finite nonnegative map and renormalises to 1.
/// When nothing is removed the input is returned unchanged.
pub fn prune<K: Ord + Clone>(dist: &BTreeMap<K, f64>, policy: PrunePolicy) -> Result<Pruned<K>> {
    let total: f64 = dist.values().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numerical(format!("cannot prune a map with total mass {total}")));
    }
    let kept: BTreeMap<K, f64> = match policy {
        PrunePolicy::None => dist.clone(),
        PrunePolicy::Threshold(eps) => dist
            .iter()
            .filter(|(_, &p)| p / total >= eps)
            .map(|(k, &p)| (k.clone(), p))
            .collect(),
        PrunePolicy::TopMass(tau) => {
            let mut ranked: Vec<(&K, f64)> = dist.iter().map(|(k, &p)| (k, p)).collect();
            // descending mass; ties keep key order
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            let mut out = BTreeMap::new();
            let mut acc = 0.0;
            for (k, p) in ranked {
                if acc >= tau * total {
                    break;
                }
                acc += p;
                out.insert(k.clone(), p);
            }
            out
        }
    };
    if kept.is_empty() {
        return Err(Error::InvalidInput(format!(
            "pruning with {policy} removed every entry"
        )));
    }
    if kept.len() == dist.len() {
        return Ok(Pruned {
            kept,
            removed_mass: 0.0,
        });
    }
    let kept_total: f64 = kept.values().sum();
    Ok(Pruned {
        kept: kept.into_iter().map(|(k, p)| (k, p / kept_total)).collect(),
        removed_mass: 1.0 - kept_total / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ConstantCache;
    use crate::model::{LociShape, ModelParams};
    use approx::assert_relative_eq;

    fn map(entries: &[(&'static str, f64)]) -> BTreeMap<&'static str, f64> {
        entries.iter().copied().collect()
    }

    #[test]
    fn prune_examples() {
        let d = map(&[("a", 0.7), ("b", 0.2), ("c", 0.1)]);
        assert_eq!(prune(&d, PrunePolicy::Threshold(0.0)).unwrap().kept, d);
        assert_eq!(prune(&d, PrunePolicy::TopMass(1.0)).unwrap().kept, d);
        for policy in [PrunePolicy::TopMass(0.85), PrunePolicy::Threshold(0.15)] {
            let p = prune(&d, policy).unwrap();
            assert_eq!(p.kept.len(), 2);
            assert_relative_eq!(p.kept["a"], 7.0 / 9.0, epsilon = 1e-15);
            assert_relative_eq!(p.kept["b"], 2.0 / 9.0, epsilon = 1e-15);
            assert_relative_eq!(p.removed_mass, 0.1, epsilon = 1e-15);
        }
        assert!(prune(&d, PrunePolicy::Threshold(0.8)).is_err());
    }

    #[test]
    fn prune_policy_parsing() {
        assert_eq!("topmass:0.999".parse::<PrunePolicy>().unwrap(), PrunePolicy::TopMass(0.999));
        assert_eq!("threshold:1e-4".parse::<PrunePolicy>().unwrap(), PrunePolicy::Threshold(1e-4));
        assert_eq!("none".parse::<PrunePolicy>().unwrap(), PrunePolicy::None);
        assert!("topmass:1.5".parse::<PrunePolicy>().is_err());
        assert!("bogus:0.1".parse::<PrunePolicy>().is_err());
        assert!("topmass".parse::<PrunePolicy>().is_err());
    }

    fn neutral_cache() -> ConstantCache {
        let p = ModelParams::neutral(LociShape::new(vec![2, 2]).unwrap(), vec![1.0; 4]).unwrap();
        ConstantCache::new(p, 2000, 5).unwrap()
    }

    #[test]
    fn zero_state_has_no_rate_table() {
        let c = neutral_cache();
        assert!(jump_rates(&c, &MultiIndex::zeros(4)).is_err());
    }

    #[test]
    fn neutral_model_has_no_branching() {
        let c = neutral_cache();
        let t = jump_rates(&c, &MultiIndex::new(vec![2, 1, 0, 3])).unwrap();
        assert!(t
            .entries
            .iter()
            .all(|j| matches!(j.kind, JumpKind::Coalescence | JumpKind::Mutation)));
        let total: f64 = t.entries.iter().map(|j| j.rate).sum();
        assert_relative_eq!(total, t.total_rate, epsilon = 1e-12);
    }

    #[test]
    fn zero_time_and_zero_state_are_fixed_points() {
        let c = neutral_cache();
        let dp = DualProcess::new(&c);
        let m = MultiIndex::new(vec![2, 1, 0, 3]);
        assert_eq!(simulate_dual_path(&dp, &m, 0.0, 1).unwrap(), m);
        let z = MultiIndex::zeros(4);
        assert_eq!(simulate_dual_path(&dp, &z, 5.0, 1).unwrap(), z);
        let t = estimate_transition(&dp, &m, 0.0, 10, 1).unwrap();
        assert_eq!(t.mass, BTreeMap::from([(m.clone(), 1.0)]));
        assert!(estimate_transition(&dp, &m, 0.1, 0, 1).is_err());
        assert!(estimate_transition(&dp, &m, -0.1, 10, 1).is_err());
    }

    #[test]
    fn runaway_guard_fires() {
        let p = ModelParams::two_locus_diagonal([1.0; 4], [5.0, 0.0, 5.0, 0.0], 5.0, 5.0).unwrap();
        let c = ConstantCache::new(p, 2000, 5).unwrap();
        let dp = DualProcess::with_runaway(&c, RunawayBound { factor: 1, offset: 1 });
        let m = MultiIndex::new(vec![1, 0, 0, 0]);
        let err = estimate_transition(&dp, &m, 5.0, 200, 3).unwrap_err();
        assert!(matches!(err, Error::Runaway(_)));
    }

    #[test]
    fn kernel_memoises_by_origin_and_gap() {
        let c = neutral_cache();
        let k = TransitionKernel::new(&c, 500, 9);
        let m = MultiIndex::new(vec![3, 0, 1, 1]);
        let a = k.transition(&m, 0.2).unwrap();
        let b = k.transition(&m, 0.2).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let fresh = TransitionKernel::new(&c, 500, 9).transition(&m, 0.2).unwrap();
        assert_eq!(*a, *fresh);
        assert_relative_eq!(a.total_mass(), 1.0, epsilon = 1e-12);
    }
}
