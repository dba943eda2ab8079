//! Forward simulation of the signal and of multinomial observations.
//!
//! The signal is approximated by a discrete Wright-Fisher chain with `N_pop`
//! individuals per locus and generation length `1/N_pop`: parents are drawn
//! with probabilities proportional to `x_i (1 + σ̃_i(x)/N_pop)`, then the
//! offspring frequencies are mixed with the parent-independent mutation
//! distribution, `x_i ← x_i (1 − |α|/(2N_pop)) + α_i/(2N_pop)`. Its
//! diffusion limit has generator with drift `μ + g` and covariance `D`.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};

use crate::constants::ConstantCache;
use crate::constants::Moments;
use crate::error::{Error, Result};
use crate::model::{LociShape, ModelParams, MultiIndex, SimplexPoint};
use crate::seed::StreamKey;

pub const DEFAULT_POP_SIZE: u64 = 10_000;
pub const MIN_POP_SIZE: u64 = 100;

/// A simulated signal path observed at (snapped) times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SimplexPoint>,
}

/// Observation times, per-locus sample sizes and counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub times: Vec<f64>,
    pub sizes: Vec<Vec<u64>>,
    pub counts: Vec<MultiIndex>,
}

impl ObservationSet {
    pub fn new(shape: &LociShape, times: Vec<f64>, counts: Vec<MultiIndex>) -> Result<Self> {
        if times.len() != counts.len() {
            return Err(Error::InvalidInput(format!(
                "{} observation times but {} count vectors",
                times.len(),
                counts.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("observation times must be strictly increasing".into()));
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(format!("observation time {t} is not finite")));
        }
        for y in &counts {
            if y.len() != shape.total() {
                return Err(Error::Shape(format!(
                    "count vector {y} has length {}, expected {}",
                    y.len(),
                    shape.total()
                )));
            }
        }
        let sizes = counts.iter().map(|y| y.locus_totals(shape)).collect();
        Ok(Self {
            times,
            sizes,
            counts,
        })
    }

    /// Like [`ObservationSet::new`] but also checks declared sample sizes.
    pub fn with_sizes(
        shape: &LociShape,
        times: Vec<f64>,
        sizes: Vec<Vec<u64>>,
        counts: Vec<MultiIndex>,
    ) -> Result<Self> {
        let obs = Self::new(shape, times, counts)?;
        if sizes.len() != obs.len() {
            return Err(Error::InvalidInput(format!(
                "{} size vectors for {} observations",
                sizes.len(),
                obs.len()
            )));
        }
        for (j, (declared, actual)) in sizes.iter().zip(&obs.sizes).enumerate() {
            if declared != actual {
                return Err(Error::InvalidInput(format!(
                    "observation {j}: per-locus counts {actual:?} do not match declared sizes {declared:?}"
                )));
            }
        }
        Ok(obs)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One-generation Wright-Fisher chain approximating the c-WF diffusion.
#[derive(Debug, Clone)]
pub struct WrightFisherChain<'a> {
    params: &'a ModelParams,
    pop_size: u64,
}

impl<'a> WrightFisherChain<'a> {
    pub fn new(params: &'a ModelParams, pop_size: u64) -> Result<Self> {
        if pop_size < MIN_POP_SIZE {
            return Err(Error::InvalidInput(format!(
                "population size {pop_size} is below the minimum {MIN_POP_SIZE}"
            )));
        }
        Ok(Self { params, pop_size })
    }

    pub fn pop_size(&self) -> u64 {
        self.pop_size
    }

    /// Duration of one generation, `1/N_pop`.
    pub fn generation_time(&self) -> f64 {
        1.0 / self.pop_size as f64
    }

    /// Advances `x` by one generation in place.
    pub fn step<R: Rng + ?Sized>(&self, x: &mut [f64], rng: &mut R) {
        let n = self.pop_size as f64;
        let eff = self.params.effective_selection_unchecked(x);
        let mut probs = Vec::with_capacity(x.len());
        let mut counts = vec![0u64; x.len()];
        for (l, range) in self.params.shape().ranges().enumerate() {
            probs.clear();
            probs.extend(range.clone().map(|i| x[i] * (1.0 + eff[i] / n)));
            multinomial(self.pop_size, &probs, rng, &mut counts[range.clone()]);
            let shrink = 1.0 - self.params.alpha_locus_total(l) / (2.0 * n);
            for i in range {
                x[i] = counts[i] as f64 / n * shrink + self.params.alpha()[i] / (2.0 * n);
            }
        }
    }

    pub fn advance<R: Rng + ?Sized>(&self, x: &mut [f64], generations: u64, rng: &mut R) {
        for _ in 0..generations {
            self.step(x, rng);
        }
    }
}

/// Multinomial draw by sequential conditional binomials; `weights` need not
/// be normalised.
pub(crate) fn multinomial<R: Rng + ?Sized>(size: u64, weights: &[f64], rng: &mut R, out: &mut [u64]) {
    let mut left = size;
    let mut mass: f64 = weights.iter().sum();
    for (i, &w) in weights.iter().enumerate() {
        if i + 1 == weights.len() {
            out[i] = left;
            break;
        }
        if left == 0 || mass <= 0.0 {
            out[i] = 0;
            continue;
        }
        let p = (w / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, p).expect("valid binomial").sample(rng);
        out[i] = c;
        left -= c;
        mass -= w;
    }
}

/// Simulates the chain from `x0` and records the state at each requested
/// time, snapped to the nearest generation. Returned times are the snapped
/// ones.
pub fn simulate_cwf(
    params: &ModelParams,
    x0: &SimplexPoint,
    times: &[f64],
    pop_size: u64,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = StreamKey::new(seed, "sim/path").rng(0);
    simulate_cwf_with_rng(params, x0, times, pop_size, &mut rng)
}

pub fn simulate_cwf_with_rng<R: Rng + ?Sized>(
    params: &ModelParams,
    x0: &SimplexPoint,
    times: &[f64],
    pop_size: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    params.check_point(x0)?;
    let chain = WrightFisherChain::new(params, pop_size)?;
    let gens = snap_to_generations(times, pop_size)?;
    let mut x = x0.as_slice().to_vec();
    let mut current = 0u64;
    let mut states = Vec::with_capacity(gens.len());
    for &g in &gens {
        chain.advance(&mut x, g - current, rng);
        current = g;
        states.push(SimplexPoint::from_raw(x.clone()));
    }
    Ok(Trajectory {
        times: gens.iter().map(|&g| g as f64 / pop_size as f64).collect(),
        states,
    })
}

/// Generation indices nearest to `times`; rejects negative or colliding times.
pub fn snap_to_generations(times: &[f64], pop_size: u64) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("time {t} must be finite and nonnegative")));
        }
        let g = (t * pop_size as f64).round() as u64;
        if let Some(&prev) = out.last() {
            if g <= prev {
                return Err(Error::InvalidInput(format!(
                    "time {t} does not advance past the previous generation at population size {pop_size}"
                )));
            }
        }
        out.push(g);
    }
    Ok(out)
}

/// Draws from `p_{α,σ,J}` by resampling the cache's proposal points with
/// weights `e^{2V}`. Without selection the draw is a fresh Dirichlet sample.
#[derive(Debug)]
pub struct StationarySampler<'a> {
    cache: &'a ConstantCache,
    cumulative: Option<Vec<f64>>,
}

/// Minimum effective sample size of the resampling weights.
pub const MIN_EFFECTIVE_SAMPLES: f64 = 10.0;

impl<'a> StationarySampler<'a> {
    pub fn new(cache: &'a ConstantCache) -> Result<Self> {
        if cache.params().is_neutral() {
            return Ok(Self {
                cache,
                cumulative: None,
            });
        }
        let ess = cache.effective_sample_size();
        if ess < MIN_EFFECTIVE_SAMPLES {
            return Err(Error::Numerical(format!(
                "effective sample size {ess:.1} of the stationary weights is below {MIN_EFFECTIVE_SAMPLES}; increase the number of Monte Carlo samples"
            )));
        }
        let tilts = cache.log_tilts();
        let max = tilts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut acc = 0.0;
        let cumulative = tilts
            .iter()
            .map(|&t| {
                acc += (t - max).exp();
                acc
            })
            .collect();
        Ok(Self {
            cache,
            cumulative: Some(cumulative),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SimplexPoint {
        match &self.cumulative {
            Some(cum) => {
                let u = rng.random::<f64>() * cum[cum.len() - 1];
                let b = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
                SimplexPoint::from_raw(self.cache.point(b).to_vec())
            }
            None => dirichlet(self.cache.params(), rng),
        }
    }
}

fn dirichlet<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> SimplexPoint {
    let mut x = vec![0.0; params.shape().total()];
    for range in params.shape().ranges() {
        loop {
            let mut sum = 0.0;
            for i in range.clone() {
                x[i] = Gamma::new(params.alpha()[i], 1.0)
                    .expect("alpha validated positive")
                    .sample(rng);
                sum += x[i];
            }
            if sum > 0.0 {
                x[range.clone()].iter_mut().for_each(|v| *v /= sum);
                break;
            }
        }
    }
    SimplexPoint::from_raw(x)
}

/// One draw from the stationary law.
pub fn sample_stationary(cache: &ConstantCache, seed: u64) -> Result<SimplexPoint> {
    let mut rng = StreamKey::new(seed, "sim/stationary").rng(0);
    Ok(StationarySampler::new(cache)?.sample(&mut rng))
}

/// Independent multinomial counts at each locus.
pub fn sample_observation_with_rng<R: Rng + ?Sized>(
    shape: &LociShape,
    x: &SimplexPoint,
    sizes: &[u64],
    rng: &mut R,
) -> Result<MultiIndex> {
    if x.len() != shape.total() {
        return Err(Error::Shape(format!(
            "simplex point has length {}, expected {}",
            x.len(),
            shape.total()
        )));
    }
    if sizes.len() != shape.num_loci() {
        return Err(Error::Shape(format!(
            "{} sample sizes for {} loci",
            sizes.len(),
            shape.num_loci()
        )));
    }
    let mut counts = vec![0u64; shape.total()];
    for (range, &n) in shape.ranges().zip(sizes) {
        multinomial(n, &x.as_slice()[range.clone()], rng, &mut counts[range]);
    }
    Ok(MultiIndex::new(counts.into_iter().map(|c| c as u32).collect()))
}

pub fn sample_observation(
    shape: &LociShape,
    x: &SimplexPoint,
    sizes: &[u64],
    seed: u64,
) -> Result<MultiIndex> {
    let mut rng = StreamKey::new(seed, "sim/observation").rng(0);
    sample_observation_with_rng(shape, x, sizes, &mut rng)
}

/// Simulates observations along a trajectory; observation `j` uses stream `j`.
pub fn observe_trajectory(
    shape: &LociShape,
    traj: &Trajectory,
    sizes: &[Vec<u64>],
    seed: u64,
) -> Result<ObservationSet> {
    if sizes.len() != traj.times.len() {
        return Err(Error::InvalidInput(format!(
            "{} size vectors for {} trajectory points",
            sizes.len(),
            traj.times.len()
        )));
    }
    let key = StreamKey::new(seed, "sim/observations");
    let counts = traj
        .states
        .iter()
        .zip(sizes)
        .enumerate()
        .map(|(j, (x, n))| sample_observation_with_rng(shape, x, n, &mut key.rng(j as u64)))
        .collect::<Result<Vec<_>>>()?;
    ObservationSet::with_sizes(shape, traj.times.clone(), sizes.to_vec(), counts)
}
