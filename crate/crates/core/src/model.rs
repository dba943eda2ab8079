//! Model definition of the coupled Wright-Fisher diffusion.
//!
//! All per-allele quantities (frequencies, mutation parameters, selection
//! parameters, dual states) share one flat layout: locus 0's alleles first,
//! then locus 1's, and so on. [`LociShape`] owns the offsets.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Per-locus sums must be within this distance of 1 to be accepted as-is.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Per-locus sums within this distance of 1 are renormalised; farther ones are rejected.
pub const SIMPLEX_RENORMALIZE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LociShape {
    alleles: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl LociShape {
    pub fn new(alleles: Vec<usize>) -> Result<Self> {
        if alleles.is_empty() {
            return Err(Error::InvalidInput("at least one locus is required".into()));
        }
        if let Some(l) = alleles.iter().position(|&k| k < 2) {
            return Err(Error::InvalidInput(format!(
                "locus {l} has {} alleles; at least 2 are required",
                alleles[l]
            )));
        }
        let mut offsets = Vec::with_capacity(alleles.len());
        let mut total = 0;
        for &k in &alleles {
            offsets.push(total);
            total += k;
        }
        Ok(Self {
            alleles,
            offsets,
            total,
        })
    }

    pub fn num_loci(&self) -> usize {
        self.alleles.len()
    }

    pub fn alleles(&self) -> &[usize] {
        &self.alleles
    }

    /// Total number of alleles across loci.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Flat index range covered by locus `l`.
    pub fn range(&self, l: usize) -> Range<usize> {
        self.offsets[l]..self.offsets[l] + self.alleles[l]
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.num_loci()).map(move |l| self.range(l))
    }

    /// Locus owning flat index `idx`.
    pub fn locus_of(&self, idx: usize) -> usize {
        self.offsets.partition_point(|&o| o <= idx) - 1
    }

    fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.total {
            return Err(Error::Shape(format!(
                "{what} has length {len}, expected {}",
                self.total
            )));
        }
        Ok(())
    }
}

/// A point of the product simplex, stored flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    /// Validates `coords` against `shape`. Loci whose sum is off by at most
    /// [`SIMPLEX_RENORMALIZE_TOL`] are divided by their sum.
    pub fn new(shape: &LociShape, mut coords: Vec<f64>) -> Result<Self> {
        shape.check_len("simplex point", coords.len())?;
        for (l, range) in shape.ranges().enumerate() {
            let block = &mut coords[range];
            if let Some(v) = block.iter().find(|v| !v.is_finite() || **v < -SIMPLEX_TOL) {
                return Err(Error::InvalidInput(format!(
                    "locus {l} has an invalid frequency {v}"
                )));
            }
            for v in block.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
            let sum: f64 = block.iter().sum();
            let gap = (sum - 1.0).abs();
            if gap > SIMPLEX_RENORMALIZE_TOL {
                return Err(Error::InvalidInput(format!(
                    "locus {l} frequencies sum to {sum}, not 1"
                )));
            }
            if gap > SIMPLEX_TOL {
                block.iter_mut().for_each(|v| *v /= sum);
            }
        }
        Ok(Self(coords))
    }

    /// Barycenter of the product simplex (uniform frequencies at every locus).
    pub fn barycenter(shape: &LociShape) -> Self {
        let mut coords = vec![0.0; shape.total()];
        for range in shape.ranges() {
            let k = range.len() as f64;
            coords[range].iter_mut().for_each(|v| *v = 1.0 / k);
        }
        Self(coords)
    }

    /// Wraps coordinates produced by a construction that is on the simplex by design.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Evaluates the monomial `x^m`, with `0^0 = 1`.
    pub fn monomial(&self, m: &MultiIndex) -> f64 {
        self.0
            .iter()
            .zip(m.as_slice())
            .filter(|(_, &e)| e > 0)
            .map(|(&x, &e)| x.powi(e as i32))
            .product()
    }
}

/// A dual-process state / mixture label `m ∈ ℕ^K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn unit(len: usize, idx: usize) -> Self {
        let mut m = Self::zeros(len);
        m.0[idx] = 1;
        m
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    /// `|m|`, summed over all loci.
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn locus_total(&self, shape: &LociShape, l: usize) -> u64 {
        self.0[shape.range(l)].iter().map(|&v| u64::from(v)).sum()
    }

    pub fn get(&self, idx: usize) -> u32 {
        self.0[idx]
    }

    /// Element-wise sum. Panics on length mismatch.
    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.len(), other.len(), "multi-index length mismatch");
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self + e_idx`
    pub fn incremented(&self, idx: usize) -> MultiIndex {
        let mut m = self.clone();
        m.0[idx] += 1;
        m
    }

    /// `self - e_idx`, or `None` if that entry is already zero.
    pub fn decremented(&self, idx: usize) -> Option<MultiIndex> {
        let mut m = self.clone();
        m.0[idx] = m.0[idx].checked_sub(1)?;
        Some(m)
    }

    /// Counts as per-locus sums.
    pub fn locus_totals(&self, shape: &LociShape) -> Vec<u64> {
        (0..shape.num_loci())
            .map(|l| self.locus_total(shape, l))
            .collect()
    }

    /// Every multi-index of length `len` with `|m| <= max_total`, in
    /// lexicographic order.
    pub fn all_up_to(len: usize, max_total: u32) -> Vec<MultiIndex> {
        fn rec(prefix: &mut Vec<u32>, len: usize, left: u32, out: &mut Vec<MultiIndex>) {
            if prefix.len() == len {
                out.push(MultiIndex(prefix.clone()));
                return;
            }
            for v in 0..=left {
                prefix.push(v);
                rec(prefix, len, left - v, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::with_capacity(len), len, max_total, &mut out);
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split('-')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::InvalidInput(format!("bad multi-index entry {p:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(MultiIndex)
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Vec::<u32>::deserialize(d).map(MultiIndex)
    }
}

/// Parameters `(α, σ, J)` of the c-WF diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    shape: LociShape,
    alpha: Vec<f64>,
    sigma: Vec<f64>,
    /// Dense `K × K`, row-major.
    coupling: Vec<f64>,
}

impl ModelParams {
    pub fn new(
        shape: LociShape,
        alpha: Vec<f64>,
        sigma: Vec<f64>,
        coupling: Vec<f64>,
    ) -> Result<Self> {
        let k = shape.total();
        shape.check_len("alpha", alpha.len())?;
        shape.check_len("sigma", sigma.len())?;
        if coupling.len() != k * k {
            return Err(Error::Shape(format!(
                "coupling matrix has {} entries, expected {k}x{k}",
                coupling.len()
            )));
        }
        if let Some(i) = alpha.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "alpha[{i}] = {} must be positive",
                alpha[i]
            )));
        }
        if let Some(i) = sigma.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "sigma[{i}] = {} must be nonnegative",
                sigma[i]
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let v = coupling[i * k + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "J[{i}][{j}] = {v} must be nonnegative"
                    )));
                }
                if v != coupling[j * k + i] {
                    return Err(Error::InvalidInput(format!(
                        "J is not symmetric: J[{i}][{j}] = {v} but J[{j}][{i}] = {}",
                        coupling[j * k + i]
                    )));
                }
                if v != 0.0 && shape.locus_of(i) == shape.locus_of(j) {
                    return Err(Error::InvalidInput(format!(
                        "J[{i}][{j}] = {v} lies in diagonal block of locus {}; within-locus blocks must be zero",
                        shape.locus_of(i)
                    )));
                }
            }
        }
        Ok(Self {
            shape,
            alpha,
            sigma,
            coupling,
        })
    }

    /// Two loci with two alleles each, coupled as `J^{(12)} = diag(j1, j2)`.
    pub fn two_locus_diagonal(alpha: [f64; 4], sigma: [f64; 4], j1: f64, j2: f64) -> Result<Self> {
        let mut coupling = vec![0.0; 16];
        coupling[2] = j1;
        coupling[8] = j1;
        coupling[7] = j2;
        coupling[13] = j2;
        Self::new(
            LociShape::new(vec![2, 2])?,
            alpha.to_vec(),
            sigma.to_vec(),
            coupling,
        )
    }

    /// Parent-independent mutation only (`σ = 0`, `J = 0`).
    pub fn neutral(shape: LociShape, alpha: Vec<f64>) -> Result<Self> {
        let k = shape.total();
        Self::new(shape, alpha, vec![0.0; k], vec![0.0; k * k])
    }

    pub fn shape(&self) -> &LociShape {
        &self.shape
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Entry `J_{ij}` in flat indexing.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.shape.total() + j]
    }

    pub fn coupling_matrix(&self) -> &[f64] {
        &self.coupling
    }

    /// `|α^{(l)}|`
    pub fn alpha_locus_total(&self, l: usize) -> f64 {
        self.alpha[self.shape.range(l)].iter().sum()
    }

    /// True when `σ = 0` and `J = 0`.
    pub fn is_neutral(&self) -> bool {
        self.sigma.iter().all(|&s| s == 0.0) && self.coupling.iter().all(|&j| j == 0.0)
    }

    pub(crate) fn check_point(&self, x: &SimplexPoint) -> Result<()> {
        self.shape.check_len("simplex point", x.len())
    }

    pub(crate) fn check_index(&self, m: &MultiIndex) -> Result<()> {
        self.shape.check_len("multi-index", m.len())
    }

    /// `V(x) = xᵀσ + ½ xᵀJx` without shape checks.
    pub(crate) fn potential_unchecked(&self, x: &[f64]) -> f64 {
        let k = self.shape.total();
        let linear: f64 = x.iter().zip(&self.sigma).map(|(a, b)| a * b).sum();
        let mut quad = 0.0;
        for i in 0..k {
            let row = &self.coupling[i * k..(i + 1) * k];
            let jx: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            quad += x[i] * jx;
        }
        linear + 0.5 * quad
    }

    /// `σ̃(x) = σ + Jx`; diagonal blocks of `J` vanish so only other loci contribute.
    pub(crate) fn effective_selection_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let k = self.shape.total();
        (0..k)
            .map(|i| {
                let row = &self.coupling[i * k..(i + 1) * k];
                self.sigma[i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

/// Fitness potential `V(x) = xᵀσ + ½ xᵀJx`.
pub fn fitness_potential(params: &ModelParams, x: &SimplexPoint) -> Result<f64> {
    params.check_point(x)?;
    Ok(params.potential_unchecked(x.as_slice()))
}

/// Parent-independent mutation drift, entry `(l,i)` is `½(α_i − |α^{(l)}| x_i)`.
pub fn mutation_drift(params: &ModelParams, x: &SimplexPoint) -> Result<Vec<f64>> {
    params.check_point(x)?;
    let mut out = vec![0.0; x.len()];
    for (l, range) in params.shape.ranges().enumerate() {
        let total = params.alpha_locus_total(l);
        for i in range {
            out[i] = 0.5 * (params.alpha[i] - total * x.as_slice()[i]);
        }
    }
    Ok(out)
}

/// Selection drift `g(x) = D(x)(σ + Jx)`.
pub fn selection_drift(params: &ModelParams, x: &SimplexPoint) -> Result<Vec<f64>> {
    params.check_point(x)?;
    let xs = x.as_slice();
    let eff = params.effective_selection_unchecked(xs);
    let mut out = vec![0.0; xs.len()];
    for range in params.shape.ranges() {
        let mean: f64 = range.clone().map(|k| xs[k] * eff[k]).sum();
        for i in range {
            // Σ_k x_i(δ_ik − x_k) σ̃_k = x_i (σ̃_i − Σ_k x_k σ̃_k)
            out[i] = xs[i] * (eff[i] - mean);
        }
    }
    Ok(out)
}

/// Per-locus Wright-Fisher covariance `d_ij = x_i(δ_ij − x_j)`.
pub fn diffusion_matrix(shape: &LociShape, x: &SimplexPoint, l: usize) -> Result<Vec<Vec<f64>>> {
    shape.check_len("simplex point", x.len())?;
    if l >= shape.num_loci() {
        return Err(Error::Shape(format!(
            "locus {l} out of range for {} loci",
            shape.num_loci()
        )));
    }
    let xl = &x.as_slice()[shape.range(l)];
    Ok(xl
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            xl.iter()
                .enumerate()
                .map(|(j, &xj)| xi * (if i == j { 1.0 } else { 0.0 } - xj))
                .collect()
        })
        .collect())
}

/// Applies the c-WF generator to the monomial `f(x) = x^n` and evaluates at `x`.
///
/// Derivatives are taken in closed form:
/// `∂_i f = n_i x^{n−e_i}`, `∂_i∂_j f = n_i n_j x^{n−e_i−e_j}` (`i ≠ j`) and
/// `∂_i² f = n_i(n_i−1) x^{n−2e_i}`.
pub fn apply_generator_to_monomial(
    params: &ModelParams,
    n: &MultiIndex,
    x: &SimplexPoint,
) -> Result<f64> {
    params.check_point(x)?;
    params.check_index(n)?;
    let xs = x.as_slice();
    let e = n.as_slice();
    let mu = mutation_drift(params, x)?;
    let g = selection_drift(params, x)?;

    // x^{n - a e_i - b e_j}, zero whenever an exponent would go negative.
    let reduced = |drops: &[(usize, u32)]| -> f64 {
        let mut out = 1.0;
        for (k, (&xk, &ek)) in xs.iter().zip(e).enumerate() {
            let d: u32 = drops.iter().filter(|(i, _)| *i == k).map(|(_, c)| c).sum();
            if d > ek {
                return 0.0;
            }
            let p = ek - d;
            if p > 0 {
                out *= xk.powi(p as i32);
            }
        }
        out
    };

    let mut first = 0.0;
    let mut second = 0.0;
    for range in params.shape.ranges() {
        for i in range.clone() {
            if e[i] == 0 {
                continue;
            }
            let ni = f64::from(e[i]);
            first += (mu[i] + g[i]) * ni * reduced(&[(i, 1)]);
            for j in range.clone() {
                let dij = xs[i] * (if i == j { 1.0 } else { 0.0 } - xs[j]);
                let d2 = if i == j {
                    ni * (ni - 1.0) * reduced(&[(i, 2)])
                } else {
                    ni * f64::from(e[j]) * reduced(&[(i, 1), (j, 1)])
                };
                second += dij * d2;
            }
        }
    }
    Ok(first + 0.5 * second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_locus(alpha: Vec<f64>, sigma: Vec<f64>) -> ModelParams {
        let k = alpha.len();
        ModelParams::new(LociShape::new(vec![k]).unwrap(), alpha, sigma, vec![0.0; k * k]).unwrap()
    }

    fn pt(shape: &LociShape, v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(shape, v.to_vec()).unwrap()
    }

    #[test]
    fn shape_offsets() {
        let s = LociShape::new(vec![2, 3, 2]).unwrap();
        assert_eq!(s.total(), 7);
        assert_eq!(s.range(1), 2..5);
        assert_eq!(s.locus_of(0), 0);
        assert_eq!(s.locus_of(4), 1);
        assert_eq!(s.locus_of(6), 2);
        assert!(LociShape::new(vec![2, 1]).is_err());
        assert!(LociShape::new(vec![]).is_err());
    }

    #[test]
    fn simplex_validation() {
        let s = LociShape::new(vec![2, 2]).unwrap();
        assert!(SimplexPoint::new(&s, vec![0.5, 0.5, 0.2, 0.8]).is_ok());
        let p = SimplexPoint::new(&s, vec![0.5 + 5e-10, 0.5, 0.2, 0.8]).unwrap();
        let sum: f64 = p.as_slice()[..2].iter().sum();
        assert!((sum - 1.0).abs() <= 1e-15);
        assert!(SimplexPoint::new(&s, vec![0.5 + 1e-6, 0.5, 0.2, 0.8]).is_err());
        assert!(SimplexPoint::new(&s, vec![1.5, -0.5, 0.2, 0.8]).is_err());
        assert!(matches!(
            SimplexPoint::new(&s, vec![0.5, 0.5]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn multi_index_text_round_trip() {
        let m = MultiIndex::new(vec![4, 6, 4, 6]);
        assert_eq!(m.to_string(), "4-6-4-6");
        assert_eq!("4-6-4-6".parse::<MultiIndex>().unwrap(), m);
        assert!("4-x".parse::<MultiIndex>().is_err());
        assert_eq!(MultiIndex::all_up_to(4, 6).len(), 210);
    }

    #[test]
    fn params_reject_bad_coupling() {
        let s = LociShape::new(vec![2, 2]).unwrap();
        let mut j = vec![0.0; 16];
        j[1] = 1.0;
        j[4] = 1.0;
        assert!(ModelParams::new(s.clone(), vec![1.0; 4], vec![0.0; 4], j).is_err());
        let mut j = vec![0.0; 16];
        j[2] = 1.0;
        assert!(ModelParams::new(s.clone(), vec![1.0; 4], vec![0.0; 4], j).is_err());
        assert!(ModelParams::new(s.clone(), vec![1.0, -1.0, 1.0, 1.0], vec![0.0; 4], vec![0.0; 16]).is_err());
        assert!(ModelParams::new(s, vec![1.0; 4], vec![0.0, -0.1, 0.0, 0.0], vec![0.0; 16]).is_err());
    }

    #[test]
    fn potential_examples() {
        let p = one_locus(vec![1.0, 1.0], vec![0.0, 0.0]);
        let s = p.shape().clone();
        assert_eq!(fitness_potential(&p, &pt(&s, &[0.3, 0.7])).unwrap(), 0.0);

        let p = one_locus(vec![1.0, 1.0], vec![1.0, 0.0]);
        assert_relative_eq!(fitness_potential(&p, &pt(&s, &[0.25, 0.75])).unwrap(), 0.25);

        let p = ModelParams::two_locus_diagonal([1.0; 4], [0.0; 4], 1.0, 1.0).unwrap();
        let x = SimplexPoint::barycenter(p.shape());
        // brute-force ½ xᵀJx
        let j = p.coupling_matrix();
        let xs = x.as_slice();
        let mut brute = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                brute += xs[a] * j[a * 4 + b] * xs[b];
            }
        }
        assert_relative_eq!(brute, 1.0);
        assert_relative_eq!(fitness_potential(&p, &x).unwrap(), 0.5 * brute);
    }

    #[test]
    fn mutation_drift_examples() {
        let p = one_locus(vec![1.0, 1.0], vec![0.0, 0.0]);
        let s = p.shape().clone();
        assert_eq!(mutation_drift(&p, &pt(&s, &[0.5, 0.5])).unwrap(), vec![0.0, 0.0]);
        let p = one_locus(vec![2.0, 1.0], vec![0.0, 0.0]);
        assert_eq!(mutation_drift(&p, &pt(&s, &[0.0, 1.0])).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn selection_drift_examples() {
        let s = LociShape::new(vec![2]).unwrap();
        let p = one_locus(vec![1.0, 1.0], vec![0.0, 0.0]);
        assert_eq!(selection_drift(&p, &pt(&s, &[0.3, 0.7])).unwrap(), vec![0.0, 0.0]);

        let p = one_locus(vec![1.0, 1.0], vec![0.8, 0.0]);
        assert_eq!(selection_drift(&p, &pt(&s, &[1.0, 0.0])).unwrap(), vec![0.0, 0.0]);
        let q = 0.3;
        let g = selection_drift(&p, &pt(&s, &[q, 1.0 - q])).unwrap();
        // D(x)σ for the 2×2 case
        let d = diffusion_matrix(&s, &pt(&s, &[q, 1.0 - q]), 0).unwrap();
        let ds = [d[0][0] * 0.8, d[1][0] * 0.8];
        assert_relative_eq!(g[0], q * (1.0 - q) * 0.8, epsilon = 1e-15);
        assert_relative_eq!(g[1], -q * (1.0 - q) * 0.8, epsilon = 1e-15);
        assert_relative_eq!(g[0], ds[0], epsilon = 1e-15);
        assert_relative_eq!(g[1], ds[1], epsilon = 1e-15);
    }

    #[test]
    fn diffusion_examples() {
        let s = LociShape::new(vec![2]).unwrap();
        let d = diffusion_matrix(&s, &pt(&s, &[1.0, 0.0]), 0).unwrap();
        assert!(d.iter().flatten().all(|v| *v == 0.0));
        let d = diffusion_matrix(&s, &pt(&s, &[0.5, 0.5]), 0).unwrap();
        assert_eq!(d, vec![vec![0.25, -0.25], vec![-0.25, 0.25]]);
        assert!(diffusion_matrix(&s, &pt(&s, &[0.5, 0.5]), 1).is_err());
    }

    #[test]
    fn generator_examples() {
        let p = one_locus(vec![1.0, 1.0], vec![0.0, 0.0]);
        let s = p.shape().clone();
        let x = pt(&s, &[0.2, 0.8]);
        assert_eq!(apply_generator_to_monomial(&p, &MultiIndex::zeros(2), &x).unwrap(), 0.0);
        let f = MultiIndex::unit(2, 0);
        for x1 in [0.1, 0.5, 0.9] {
            let v = apply_generator_to_monomial(&p, &f, &pt(&s, &[x1, 1.0 - x1])).unwrap();
            assert_relative_eq!(v, 0.5 * (1.0 - 2.0 * x1), epsilon = 1e-15);
        }
    }

    #[test]
    fn monomial_handles_zero_exponents() {
        let s = LociShape::new(vec![2]).unwrap();
        let x = pt(&s, &[0.0, 1.0]);
        assert_eq!(x.monomial(&MultiIndex::new(vec![0, 3])), 1.0);
        assert_eq!(x.monomial(&MultiIndex::new(vec![1, 3])), 0.0);
    }
}
