//! Monte Carlo estimation of the tilted-Dirichlet integrals
//! `C̃(m) = ∫_Δ x^{m+α−1} e^{2V(x)} dx` and of the quantities built from them.
//!
//! One [`ConstantCache`] draws `B` points from the normalised product
//! Dirichlet(α) law once. Every `C̃(m)` is then the same-sample average
//! `Π_l B(α^{(l)}) · B⁻¹ Σ_b x_b^m e^{2V(x_b)}`, so ratios between estimates
//! share common random numbers. Sums are taken in log space with
//! max-subtraction.
//!
//! Consumers use the [`Moments`] trait, which only needs `log C̃(m)`; this
//! lets closed-form moment sources stand in for the Monte Carlo cache.

use std::collections::HashMap;
use std::sync::RwLock;

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{ModelParams, MultiIndex, SimplexPoint};
use crate::seed::StreamKey;

/// Default number of proposal samples.
pub const DEFAULT_SAMPLES: usize = 100_000;

const CHUNK: usize = 4096;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Memoised estimate of `C̃(m)`, kept in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CTildeEstimate {
    pub log_value: f64,
    /// Standard error relative to the value.
    pub rel_std_error: f64,
}

impl CTildeEstimate {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn std_error(&self) -> f64 {
        self.value() * self.rel_std_error
    }
}

/// Source of the moments of the tilted-Dirichlet family `p_{α+m,σ,J}`.
///
/// Implementors provide `log C̃(m)`; everything else follows.
pub trait Moments: Sync {
    fn params(&self) -> &ModelParams;

    fn log_c_tilde(&self, m: &MultiIndex) -> Result<f64>;

    /// Relative standard error of `C̃(m)`; zero for exact sources.
    fn rel_std_error(&self, _m: &MultiIndex) -> f64 {
        0.0
    }

    fn zero_index(&self) -> MultiIndex {
        MultiIndex::zeros(self.params().shape().total())
    }

    /// `log k(m) = log C̃(m) − log C̃(0)`
    fn log_k(&self, m: &MultiIndex) -> Result<f64> {
        if m.is_zero() {
            return Ok(0.0);
        }
        Ok(self.log_c_tilde(m)? - self.log_c_tilde(&self.zero_index())?)
    }

    /// Stationary moment `k(m) = E[X^m]`.
    fn k_const(&self, m: &MultiIndex) -> Result<f64> {
        Ok(self.log_k(m)?.exp())
    }

    /// `log C_{m,n} = log C̃(m+n) + log C̃(0) − log C̃(m) − log C̃(n)`
    fn log_combination_const(&self, m: &MultiIndex, n: &MultiIndex) -> Result<f64> {
        if m.is_zero() || n.is_zero() {
            return Ok(0.0);
        }
        // fixed operand order keeps the result exactly symmetric
        let (m, n) = if m <= n { (m, n) } else { (n, m) };
        Ok(self.log_c_tilde(&m.plus(n))? + self.log_c_tilde(&self.zero_index())?
            - self.log_c_tilde(m)?
            - self.log_c_tilde(n)?)
    }

    /// `C_{m,n} = k(m+n)/(k(m)k(n))`, the constant with
    /// `h(x,m)h(x,n) = C_{m,n} h(x,m+n)`.
    fn combination_const(&self, m: &MultiIndex, n: &MultiIndex) -> Result<f64> {
        Ok(self.log_combination_const(m, n)?.exp())
    }

    /// Log of the observation marginal `d(m, y)`; sample sizes are the
    /// per-locus totals of `y`.
    fn log_obs_marginal(&self, m: &MultiIndex, y: &MultiIndex) -> Result<f64> {
        let params = self.params();
        params.check_index(m)?;
        params.check_index(y)?;
        if y.is_zero() {
            return Ok(0.0);
        }
        Ok(log_multinomial_coefficient(params, y)
            + self.log_c_tilde(&m.plus(y))?
            - self.log_c_tilde(m)?)
    }

    /// `d(m, y) = Π_l N^{(l)}!/Π_i y_i^{(l)}! · C̃(m+y)/C̃(m)`, the probability
    /// of counts `y` when the frequencies are drawn from `p_{α+m,σ,J}`.
    fn obs_marginal(&self, m: &MultiIndex, y: &MultiIndex, sizes: &[u64]) -> Result<f64> {
        check_counts(self.params(), y, sizes)?;
        Ok(self.log_obs_marginal(m, y)?.exp())
    }

    /// Log density of `p_{α+n,σ,J}` at `x` with respect to Lebesgue measure on
    /// the free coordinates of each locus. Returns `+∞` on boundary points
    /// where an exponent `α_i + n_i − 1` is negative.
    fn component_log_density(&self, n: &MultiIndex, x: &SimplexPoint) -> Result<f64> {
        let params = self.params();
        params.check_point(x)?;
        params.check_index(n)?;
        let mut log_kernel = 0.0;
        let mut diverges = false;
        for ((&xi, &a), &ni) in x.as_slice().iter().zip(params.alpha()).zip(n.as_slice()) {
            let exponent = a + f64::from(ni) - 1.0;
            if xi > 0.0 {
                log_kernel += exponent * xi.ln();
            } else if exponent > 0.0 {
                log_kernel = f64::NEG_INFINITY;
            } else if exponent < 0.0 {
                diverges = true;
            }
        }
        if diverges {
            return Ok(f64::INFINITY);
        }
        Ok(log_kernel + 2.0 * params.potential_unchecked(x.as_slice()) - self.log_c_tilde(n)?)
    }

    fn component_density(&self, n: &MultiIndex, x: &SimplexPoint) -> Result<f64> {
        Ok(self.component_log_density(n, x)?.exp())
    }

    /// Mean of `p_{α+n,σ,J}`: entry `i` is `C̃(n+e_i)/C̃(n)`.
    fn component_mean(&self, n: &MultiIndex) -> Result<Vec<f64>> {
        self.params().check_index(n)?;
        let base = self.log_c_tilde(n)?;
        (0..n.len())
            .map(|i| Ok((self.log_c_tilde(&n.incremented(i))? - base).exp()))
            .collect()
    }
}

/// `Σ_l log( N^{(l)}! / Π_i y_i^{(l)}! )`
pub fn log_multinomial_coefficient(params: &ModelParams, y: &MultiIndex) -> f64 {
    params
        .shape()
        .ranges()
        .map(|range| {
            let counts = &y.as_slice()[range];
            let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
            ln_factorial(total) - counts.iter().map(|&c| ln_factorial(u64::from(c))).sum::<f64>()
        })
        .sum()
}

/// Checks that the per-locus totals of `y` equal `sizes`.
pub fn check_counts(params: &ModelParams, y: &MultiIndex, sizes: &[u64]) -> Result<()> {
    params.check_index(y)?;
    let shape = params.shape();
    if sizes.len() != shape.num_loci() {
        return Err(Error::InvalidInput(format!(
            "{} sample sizes given for {} loci",
            sizes.len(),
            shape.num_loci()
        )));
    }
    for (l, &n) in sizes.iter().enumerate() {
        let got = y.locus_total(shape, l);
        if got != n {
            return Err(Error::InvalidInput(format!(
                "counts at locus {l} sum to {got}, declared sample size is {n}"
            )));
        }
    }
    Ok(())
}

/// Log of the multivariate Beta function `Π Γ(a_i) / Γ(Σ a_i)`.
pub fn log_multivariate_beta(a: &[f64]) -> f64 {
    a.iter().map(|&v| ln_gamma(v)).sum::<f64>() - ln_gamma(a.iter().sum())
}

/// Draws `count` independent points from the normalised product Dirichlet(α)
/// law. Point `b` uses replicate stream `b` of `constants`, so the output does
/// not depend on thread scheduling.
pub fn sample_stationary_proposal(
    params: &ModelParams,
    count: usize,
    seed: u64,
) -> Result<Vec<SimplexPoint>> {
    Ok(draw_proposal(params, count, seed)?
        .chunks(params.shape().total())
        .map(|c| SimplexPoint::from_raw(c.to_vec()))
        .collect())
}

fn draw_proposal(params: &ModelParams, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let k = params.shape().total();
    let gammas = params
        .alpha()
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|e| Error::InvalidInput(format!("alpha {a}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let key = StreamKey::new(seed, "constants");
    let mut flat = vec![0.0; count * k];
    flat.par_chunks_mut(k).enumerate().for_each(|(b, out)| {
        let mut rng = key.rng(b as u64);
        for range in params.shape().ranges() {
            loop {
                let mut sum = 0.0;
                for i in range.clone() {
                    out[i] = gammas[i].sample(&mut rng);
                    sum += out[i];
                }
                if sum > 0.0 {
                    out[range.clone()].iter_mut().for_each(|v| *v /= sum);
                    break;
                }
            }
        }
    });
    Ok(flat)
}

/// Shared Monte Carlo sample set with a memo table of `C̃(m)` estimates.
///
/// Construction is parallel; afterwards the cache is read-mostly. Concurrent
/// lookups of a missing entry may both compute it; the values are identical,
/// so the insert is idempotent.
#[derive(Debug)]
pub struct ConstantCache {
    params: ModelParams,
    samples: usize,
    seed: u64,
    points: Vec<f64>,
    log_points: Vec<f64>,
    /// `log x_{b,i}` stored per coordinate.
    log_columns: Vec<Vec<f64>>,
    log_tilt: Vec<f64>,
    log_prefactor: f64,
    table: RwLock<HashMap<MultiIndex, CTildeEstimate>>,
}

impl ConstantCache {
    pub fn new(params: ModelParams, samples: usize, seed: u64) -> Result<Self> {
        let points = draw_proposal(&params, samples, seed)?;
        let k = params.shape().total();
        let log_points: Vec<f64> = points.iter().map(|v| v.ln()).collect();
        let log_columns: Vec<Vec<f64>> = (0..k)
            .map(|i| log_points.iter().skip(i).step_by(k).copied().collect())
            .collect();
        let log_tilt: Vec<f64> = points
            .par_chunks(k)
            .map(|x| 2.0 * params.potential_unchecked(x))
            .collect();
        if let Some(b) = log_tilt.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite tilt weight at proposal sample {b}"
            )));
        }
        let log_prefactor = params
            .shape()
            .ranges()
            .map(|r| log_multivariate_beta(&params.alpha()[r]))
            .sum();
        Ok(Self {
            params,
            samples,
            seed,
            points,
            log_points,
            log_columns,
            log_tilt,
            log_prefactor,
            table: RwLock::new(HashMap::new()),
        })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Proposal point `b`.
    pub fn point(&self, b: usize) -> &[f64] {
        let k = self.params.shape().total();
        &self.points[b * k..(b + 1) * k]
    }

    /// `2V(x_b)` for each proposal point.
    pub fn log_tilts(&self) -> &[f64] {
        &self.log_tilt
    }

    /// `Σ_l log B(α^{(l)})`, converting Dirichlet expectations to integrals.
    pub fn log_prefactor(&self) -> f64 {
        self.log_prefactor
    }

    /// Log of the unnormalised integrand of `C̃(m)` at sample `b`,
    /// relative to the Dirichlet(α) proposal: `m·log x_b + 2V(x_b)`.
    pub fn log_integrand(&self, m: &MultiIndex, b: usize) -> f64 {
        let k = self.params.shape().total();
        let lx = &self.log_points[b * k..(b + 1) * k];
        let mut acc = self.log_tilt[b];
        for (&e, &l) in m.as_slice().iter().zip(lx) {
            if e > 0 {
                acc += f64::from(e) * l;
            }
        }
        acc
    }

    /// Estimate of `C̃(m)`, memoised.
    pub fn estimate_c_tilde(&self, m: &MultiIndex) -> Result<CTildeEstimate> {
        self.params.check_index(m)?;
        if let Some(e) = self.table.read().expect("constant table poisoned").get(m) {
            return Ok(*e);
        }
        let est = self.compute(m)?;
        self.table
            .write()
            .expect("constant table poisoned")
            .insert(m.clone(), est);
        Ok(est)
    }

    fn compute(&self, m: &MultiIndex) -> Result<CTildeEstimate> {
        let active: Vec<(f64, &[f64])> = m
            .as_slice()
            .iter()
            .zip(&self.log_columns)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, col)| (f64::from(e), col.as_slice()))
            .collect();
        // Per-chunk (max, Σ e^{w−max}, Σ e^{2(w−max)}), merged in chunk order.
        let partials: Vec<(f64, f64, f64)> = self
            .log_tilt
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, tilt)| {
                let lo = c * CHUNK;
                let mut logs = tilt.to_vec();
                for &(e, col) in &active {
                    for (l, &v) in logs.iter_mut().zip(&col[lo..lo + tilt.len()]) {
                        *l += e * v;
                    }
                }
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if max == f64::NEG_INFINITY {
                    return (max, 0.0, 0.0);
                }
                let (s, s2) = logs.iter().fold((0.0, 0.0), |(s, s2), &l| {
                    let w = (l - max).exp();
                    (s + w, s2 + w * w)
                });
                (max, s, s2)
            })
            .collect();
        if partials.iter().any(|(m, _, _)| m.is_nan() || *m == f64::INFINITY) {
            return Err(Error::Numerical(format!("non-finite weight while estimating C̃({m})")));
        }
        let max = partials.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Numerical(format!("all weights vanish for C̃({m})")));
        }
        let (s, s2) = partials.iter().fold((0.0, 0.0), |(s, s2), &(pm, ps, ps2)| {
            if pm == f64::NEG_INFINITY {
                return (s, s2);
            }
            let scale = (pm - max).exp();
            (s + ps * scale, s2 + ps2 * scale * scale)
        });
        let n = self.samples as f64;
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0);
        let est = CTildeEstimate {
            log_value: self.log_prefactor + max + mean.ln(),
            rel_std_error: (var / n).sqrt() / mean,
        };
        if !est.log_value.is_finite() {
            return Err(Error::Numerical(format!("C̃({m}) estimate is not finite")));
        }
        Ok(est)
    }

    /// Estimate and standard error of `Π_j C̃(numer_j) / Π_j C̃(denom_j)`.
    ///
    /// The standard error comes from the delta method over the shared sample
    /// set, so correlation between the factors is accounted for.
    pub fn ratio_estimate(&self, numer: &[MultiIndex], denom: &[MultiIndex]) -> Result<Estimate> {
        let mut log_value = 0.0;
        let mut terms = Vec::with_capacity(numer.len() + denom.len());
        for (m, sign) in numer.iter().map(|m| (m, 1.0)).chain(denom.iter().map(|m| (m, -1.0))) {
            let est = self.estimate_c_tilde(m)?;
            log_value += sign * est.log_value;
            // Normalised so the proposal average of e^{w_b − c} is 1.
            terms.push((m, sign, est.log_value - self.log_prefactor));
        }
        let n = self.samples as f64;
        let (s, s2) = (0..self.samples)
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(|b| {
                let infl: f64 = terms
                    .iter()
                    .map(|(m, sign, c)| sign * (self.log_integrand(m, b) - c).exp())
                    .sum();
                (infl, infl * infl)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0);
        let value = log_value.exp();
        Ok(Estimate {
            value,
            std_error: value * (var / n).sqrt(),
        })
    }

    /// `k(m)` with standard error.
    pub fn k_estimate(&self, m: &MultiIndex) -> Result<Estimate> {
        self.ratio_estimate(std::slice::from_ref(m), &[self.zero_index()])
    }

    /// `C_{m,n}` with standard error.
    pub fn combination_estimate(&self, m: &MultiIndex, n: &MultiIndex) -> Result<Estimate> {
        self.ratio_estimate(&[m.plus(n), self.zero_index()], &[m.clone(), n.clone()])
    }

    /// `d(m, y)` with standard error.
    pub fn obs_marginal_estimate(
        &self,
        m: &MultiIndex,
        y: &MultiIndex,
        sizes: &[u64],
    ) -> Result<Estimate> {
        check_counts(&self.params, y, sizes)?;
        let coef = log_multinomial_coefficient(&self.params, y).exp();
        let r = self.ratio_estimate(&[m.plus(y)], std::slice::from_ref(m))?;
        Ok(Estimate {
            value: coef * r.value,
            std_error: coef * r.std_error,
        })
    }

    /// Component mean entries with standard errors.
    pub fn component_mean_estimate(&self, n: &MultiIndex) -> Result<Vec<Estimate>> {
        (0..n.len())
            .map(|i| self.ratio_estimate(&[n.incremented(i)], std::slice::from_ref(n)))
            .collect()
    }

    /// Self-normalised estimate of `E_p[f(X)]` under the stationary law
    /// `p_{α,σ,J}`, with delta-method standard error.
    pub fn stationary_expectation<F>(&self, f: F) -> Estimate
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let max = self.log_tilt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (sw, swf) = (0..self.samples)
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(|b| {
                let w = (self.log_tilt[b] - max).exp();
                (w, w * f(self.point(b)))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0), |(a, c), (w, wf)| (a + w, c + wf));
        let mean = swf / sw;
        let var: f64 = (0..self.samples)
            .map(|b| {
                let w = (self.log_tilt[b] - max).exp();
                let d = w * (f(self.point(b)) - mean);
                d * d
            })
            .sum();
        Estimate {
            value: mean,
            std_error: var.sqrt() / sw,
        }
    }

    /// Effective sample size of the `e^{2V}` weights.
    pub fn effective_sample_size(&self) -> f64 {
        let max = self.log_tilt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (s, s2) = self.log_tilt.iter().fold((0.0, 0.0), |(s, s2), &l| {
            let w = (l - max).exp();
            (s + w, s2 + w * w)
        });
        s * s / s2
    }

    /// Memo table contents, sorted by multi-index.
    pub fn table_snapshot(&self) -> Vec<(MultiIndex, CTildeEstimate)> {
        let mut out: Vec<_> = self
            .table
            .read()
            .expect("constant table poisoned")
            .iter()
            .map(|(m, e)| (m.clone(), *e))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

impl Moments for ConstantCache {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn log_c_tilde(&self, m: &MultiIndex) -> Result<f64> {
        Ok(self.estimate_c_tilde(m)?.log_value)
    }

    fn rel_std_error(&self, m: &MultiIndex) -> f64 {
        self.estimate_c_tilde(m).map_or(f64::NAN, |e| e.rel_std_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LociShape;
    use approx::assert_relative_eq;

    fn uniform_one_locus(samples: usize) -> ConstantCache {
        let p = ModelParams::neutral(LociShape::new(vec![2]).unwrap(), vec![1.0, 1.0]).unwrap();
        ConstantCache::new(p, samples, 11).unwrap()
    }

    #[test]
    fn zero_index_constants_are_exact() {
        let c = uniform_one_locus(2000);
        let z = c.zero_index();
        assert_eq!(c.k_const(&z).unwrap(), 1.0);
        let m = MultiIndex::new(vec![2, 1]);
        assert_eq!(c.combination_const(&m, &z).unwrap(), 1.0);
        // uniform on [0,1]: C̃(0) = B(1,1) = 1 and the MC weights are constant
        let e = c.estimate_c_tilde(&z).unwrap();
        assert_relative_eq!(e.value(), 1.0, epsilon = 1e-12);
        assert!(e.rel_std_error < 1e-12);
    }

    #[test]
    fn estimates_are_memoised_and_reproducible() {
        let a = uniform_one_locus(5000);
        let b = uniform_one_locus(5000);
        let m = MultiIndex::new(vec![3, 1]);
        let ea = a.estimate_c_tilde(&m).unwrap();
        assert_eq!(a.table_snapshot().len(), 1);
        assert_eq!(ea, a.estimate_c_tilde(&m).unwrap());
        assert_eq!(ea.log_value.to_bits(), b.estimate_c_tilde(&m).unwrap().log_value.to_bits());
    }

    #[test]
    fn combination_is_symmetric() {
        let c = uniform_one_locus(5000);
        let m = MultiIndex::new(vec![1, 2]);
        let n = MultiIndex::new(vec![3, 0]);
        assert_eq!(
            c.combination_const(&m, &n).unwrap(),
            c.combination_const(&n, &m).unwrap()
        );
    }

    #[test]
    fn moment_ratio_lies_in_unit_interval() {
        let c = uniform_one_locus(5000);
        let m = MultiIndex::new(vec![2, 1]);
        for i in 0..2 {
            let r = (c.log_c_tilde(&m.incremented(i)).unwrap() - c.log_c_tilde(&m).unwrap()).exp();
            assert!(r > 0.0 && r < 1.0);
        }
        let mean = c.component_mean(&m).unwrap();
        assert_relative_eq!(mean.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn obs_marginal_rejects_inconsistent_sizes() {
        let c = uniform_one_locus(1000);
        let m = c.zero_index();
        let y = MultiIndex::new(vec![1, 2]);
        assert!(matches!(c.obs_marginal(&m, &y, &[2]), Err(Error::InvalidInput(_))));
        assert!(c.obs_marginal(&m, &y, &[3]).is_ok());
        assert!(matches!(c.obs_marginal(&m, &y, &[3, 1]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn uniform_predictive_is_one_half() {
        let c = uniform_one_locus(1000);
        let d = c
            .obs_marginal(&c.zero_index(), &MultiIndex::unit(2, 0), &[1])
            .unwrap();
        // E[x_1] under a symmetric proposal, estimated from a finite sample
        assert!((d - 0.5).abs() < 0.03);
    }

    #[test]
    fn uniform_density_is_flat() {
        let c = uniform_one_locus(1000);
        let s = c.params().shape().clone();
        for x1 in [0.0, 0.2, 0.9] {
            let x = SimplexPoint::new(&s, vec![x1, 1.0 - x1]).unwrap();
            assert_relative_eq!(c.component_density(&c.zero_index(), &x).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn boundary_divergence_is_flagged() {
        let p = ModelParams::neutral(LociShape::new(vec![2]).unwrap(), vec![0.5, 2.0]).unwrap();
        let c = ConstantCache::new(p, 1000, 3).unwrap();
        let x = SimplexPoint::new(c.params().shape(), vec![0.0, 1.0]).unwrap();
        assert_eq!(c.component_density(&c.zero_index(), &x).unwrap(), f64::INFINITY);
        // one extra count lifts the exponent to 0.5
        let n = MultiIndex::unit(2, 0);
        assert_eq!(c.component_density(&n, &x).unwrap(), 0.0);
    }

    #[test]
    fn proposal_rejects_zero_samples() {
        let p = ModelParams::neutral(LociShape::new(vec![2]).unwrap(), vec![1.0, 1.0]).unwrap();
        assert!(sample_stationary_proposal(&p, 0, 1).is_err());
        assert!(ConstantCache::new(p, 0, 1).is_err());
    }

    #[test]
    fn log_beta_matches_known_values() {
        // B(1,1) = 1, B(2,1) = 1/2, B(1,1,1) = 1/2
        assert_relative_eq!(log_multivariate_beta(&[1.0, 1.0]).exp(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(log_multivariate_beta(&[2.0, 1.0]).exp(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(log_multivariate_beta(&[1.0, 1.0, 1.0]).exp(), 0.5, epsilon = 1e-12);
    }
}
