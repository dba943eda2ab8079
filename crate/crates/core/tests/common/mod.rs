#![allow(dead_code)]

use cwf::constants::Moments;
use cwf::model::{LociShape, ModelParams, MultiIndex, SimplexPoint};
use cwf::Result;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Closed-form constants for σ = J = 0: `C̃(m) = Π_l B(α^{(l)} + m^{(l)})`.
pub struct DirichletMoments {
    pub params: ModelParams,
}

impl DirichletMoments {
    pub fn new(params: ModelParams) -> Self {
        assert!(params.is_neutral(), "closed form needs σ = J = 0");
        Self { params }
    }
}

pub fn log_beta(a: &[f64]) -> f64 {
    a.iter().map(|&v| ln_gamma(v)).sum::<f64>() - ln_gamma(a.iter().sum())
}

pub fn dirichlet_log_c(params: &ModelParams, m: &MultiIndex) -> f64 {
    params
        .shape()
        .ranges()
        .map(|r| {
            let a: Vec<f64> = r.clone().map(|i| params.alpha()[i] + f64::from(m.get(i))).collect();
            log_beta(&a)
        })
        .sum()
}

impl Moments for DirichletMoments {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn log_c_tilde(&self, m: &MultiIndex) -> Result<f64> {
        Ok(dirichlet_log_c(&self.params, m))
    }
}

/// `C̃ ≡ 1`, so jump rates equal the raw expansion coefficients.
pub struct UnitMoments {
    pub params: ModelParams,
}

impl Moments for UnitMoments {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn log_c_tilde(&self, _m: &MultiIndex) -> Result<f64> {
        Ok(0.0)
    }
}

pub fn illustration() -> ModelParams {
    ModelParams::two_locus_diagonal([1.8, 1.4, 1.9, 1.7], [0.5, 0.0, 0.0, 1.2], 0.9, 1.8).unwrap()
}

pub fn neutral_two_locus() -> ModelParams {
    ModelParams::neutral(LociShape::new(vec![2, 2]).unwrap(), vec![1.8, 1.4, 1.9, 1.7]).unwrap()
}

pub fn idx(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

/// Uniform-ish interior point: independent normalised Exp(1) draws per locus,
/// kept away from the boundary.
pub fn random_interior<R: Rng>(shape: &LociShape, rng: &mut R) -> SimplexPoint {
    let mut v = Vec::with_capacity(shape.total());
    for r in shape.ranges() {
        let raw: Vec<f64> = r.map(|_| 0.1 + rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        v.extend(raw.iter().map(|x| x / s));
    }
    SimplexPoint::new(shape, v).unwrap()
}

/// Log Dirichlet-multinomial pmf of counts `y` at one locus with parameter `a`.
pub fn log_dirichlet_multinomial(y: &[u32], a: &[f64]) -> f64 {
    let n: u32 = y.iter().sum();
    let mut out = ln_gamma(f64::from(n) + 1.0);
    for &c in y {
        out -= ln_gamma(f64::from(c) + 1.0);
    }
    let ay: Vec<f64> = a.iter().zip(y).map(|(a, &c)| a + f64::from(c)).collect();
    out + log_beta(&ay) - log_beta(a)
}

/// Generator applied to `f` at `x` by central finite differences in the
/// free coordinates, with drift and diffusion written out from scratch.
pub fn generator_fd<F: Fn(&[f64]) -> f64>(params: &ModelParams, f: F, x: &[f64]) -> f64 {
    let shape = params.shape();
    let k = shape.total();
    let h = 1e-4;
    let grad = |x: &[f64], i: usize| {
        let mut p = x.to_vec();
        let mut q = x.to_vec();
        p[i] += h;
        q[i] -= h;
        (f(&p) - f(&q)) / (2.0 * h)
    };
    let hess = |i: usize, j: usize| {
        let eval = |di: f64, dj: f64| {
            let mut p = x.to_vec();
            p[i] += di;
            p[j] += dj;
            f(&p)
        };
        (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h)
    };
    let mut sel = vec![0.0; k];
    for i in 0..k {
        sel[i] = params.sigma()[i];
        for j in 0..k {
            sel[i] += params.coupling(i, j) * x[j];
        }
    }
    let mut out = 0.0;
    for (l, r) in shape.ranges().enumerate() {
        let a_tot = params.alpha_locus_total(l);
        let mean_sel: f64 = r.clone().map(|i| x[i] * sel[i]).sum();
        for i in r.clone() {
            let drift = 0.5 * (params.alpha()[i] - a_tot * x[i]) + x[i] * (sel[i] - mean_sel);
            out += drift * grad(x, i);
            for j in r.clone() {
                let d = x[i] * (if i == j { 1.0 } else { 0.0 } - x[j]);
                out += 0.5 * d * hess(i, j);
            }
        }
    }
    out
}

/// Coefficients of `x^a (1−x)^b` in powers of `x`.
pub fn beta_kernel_poly(a: u32, b: u32) -> Vec<f64> {
    let mut out = vec![0.0; (a + b + 1) as usize];
    let mut binom = 1.0;
    for i in 0..=b {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        out[(a + i) as usize] = sign * binom;
        binom = binom * f64::from(b - i) / f64::from(i + 1);
    }
    out
}

/// `u(t, x) = E_x[f(X_t)]` for the neutral biallelic diffusion with mutation
/// `alpha`, where `f` and `u` are polynomials in the first frequency.
///
/// The generator maps `x^k` to `a_k x^{k−1} − b_k x^k`, so the backward
/// equation closes on coefficients of degree `≤ deg f`; integrated by RK4.
pub fn neutral_biallelic_evolve(alpha: [f64; 2], coef: &[f64], t: f64) -> Vec<f64> {
    let total = alpha[0] + alpha[1];
    let deriv = |c: &[f64]| -> Vec<f64> {
        (0..c.len())
            .map(|j| {
                let k = j as f64;
                let mut d = -0.5 * k * (total + k - 1.0) * c[j];
                if j + 1 < c.len() {
                    let k1 = k + 1.0;
                    d += 0.5 * k1 * (alpha[0] + k1 - 1.0) * c[j + 1];
                }
                d
            })
            .collect()
    };
    let steps = 20_000;
    let h = t / steps as f64;
    let mut c = coef.to_vec();
    let axpy = |c: &[f64], k: &[f64], s: f64| -> Vec<f64> { c.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..steps {
        let k1 = deriv(&c);
        let k2 = deriv(&axpy(&c, &k1, h / 2.0));
        let k3 = deriv(&axpy(&c, &k2, h / 2.0));
        let k4 = deriv(&axpy(&c, &k3, h));
        for j in 0..c.len() {
            c[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    c
}

/// Posterior mean of the first frequency at the earlier of two observation
/// times of the neutral biallelic diffusion started at stationarity, given
/// counts `near` there and `far` a time `gap` later.
///
/// Reversibility makes the same formula give the filtering mean at the later
/// time with the two count vectors swapped.
pub fn neutral_biallelic_posterior_mean(alpha: [f64; 2], near: [u32; 2], far: [u32; 2], gap: f64) -> f64 {
    let u = neutral_biallelic_evolve(alpha, &beta_kernel_poly(far[0], far[1]), gap);
    let a = alpha[0] + f64::from(near[0]);
    let b = alpha[1] + f64::from(near[1]);
    let moment = |shift: f64| -> f64 {
        u.iter()
            .enumerate()
            .map(|(j, c)| c * log_beta(&[a + j as f64 + shift, b]).exp())
            .sum()
    };
    moment(1.0) / moment(0.0)
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
