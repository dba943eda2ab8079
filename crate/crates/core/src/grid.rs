//! Density grids for mixtures of tilted Dirichlet kernels.
//!
//! Two loci with two alleles each give a 2-D grid over
//! `(x_1^{(1)}, x_1^{(2)})`. Other layouts get one 1-D marginal histogram of
//! `x_1^{(l)}` per locus, computed by reweighting the Monte Carlo proposal.

use rayon::prelude::*;

use crate::constants::{ConstantCache, Moments};
use crate::error::{Error, Result};
use crate::model::{MultiIndex, SimplexPoint};

pub const DEFAULT_RESOLUTION: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub x1: f64,
    pub x2: f64,
    pub density: f64,
    /// The density diverges at this cell (boundary with negative exponent).
    pub divergent: bool,
}

/// Cell-centred grid on `(0,1)²`; the cell area is `1/resolution²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub resolution: usize,
    pub cells: Vec<GridCell>,
}

impl DensityGrid {
    pub fn cell_area(&self) -> f64 {
        1.0 / (self.resolution * self.resolution) as f64
    }

    /// Midpoint-rule integral of the finite cells.
    pub fn integral(&self) -> f64 {
        self.cells
            .iter()
            .filter(|c| !c.divergent)
            .map(|c| c.density)
            .sum::<f64>()
            * self.cell_area()
    }

    /// Cell with the largest finite density.
    pub fn mode(&self) -> Option<&GridCell> {
        self.cells
            .iter()
            .filter(|c| !c.divergent)
            .max_by(|a, b| a.density.total_cmp(&b.density))
    }
}

/// Evaluates `Σ w(n) p_{α+n}(x)` on the 2-D grid. Requires two biallelic loci.
pub fn density_grid<'a, I>(moments: &dyn Moments, components: I, resolution: usize) -> Result<DensityGrid>
where
    I: IntoIterator<Item = (&'a MultiIndex, f64)>,
{
    let shape = moments.params().shape();
    if shape.alleles() != [2, 2] {
        return Err(Error::Shape(format!(
            "2-D density grids need two biallelic loci, got alleles {:?}",
            shape.alleles()
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("grid resolution must be positive".into()));
    }
    let comps: Vec<(&MultiIndex, f64)> = components.into_iter().collect();
    // warm the constant table outside the parallel loop
    for (n, _) in &comps {
        moments.log_c_tilde(n)?;
    }
    let h = 1.0 / resolution as f64;
    let cells = (0..resolution * resolution)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c / resolution, c % resolution);
            let x1 = (i as f64 + 0.5) * h;
            let x2 = (j as f64 + 0.5) * h;
            let x = SimplexPoint::new(shape, vec![x1, 1.0 - x1, x2, 1.0 - x2])?;
            let mut density = 0.0;
            for (n, w) in &comps {
                density += w * moments.component_density(n, &x)?;
            }
            Ok(GridCell {
                x1,
                x2,
                density,
                divergent: density.is_infinite(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityGrid { resolution, cells })
}

/// Histogram density of `x_1^{(l)}` at one locus.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalGrid {
    pub locus: usize,
    /// `(bin centre, density)` pairs over `[0, 1]`.
    pub bins: Vec<(f64, f64)>,
}

/// Per-locus marginal densities of the first allele, estimated by weighting
/// each proposal point `x_b` by `Σ_n w(n) x_b^n e^{2V(x_b)} / C̃(n)`.
pub fn marginal_grids<'a, I>(cache: &ConstantCache, components: I, bins: usize) -> Result<Vec<MarginalGrid>>
where
    I: IntoIterator<Item = (&'a MultiIndex, f64)>,
{
    if bins == 0 {
        return Err(Error::InvalidInput("bin count must be positive".into()));
    }
    let comps = components
        .into_iter()
        .map(|(n, w)| Ok((n, w.ln() - cache.log_c_tilde(n)? + cache.log_prefactor())))
        .collect::<Result<Vec<_>>>()?;
    let b_total = cache.samples() as f64;
    let weights: Vec<f64> = (0..cache.samples())
        .into_par_iter()
        .map(|b| {
            comps
                .iter()
                .map(|(n, c)| (cache.log_integrand(n, b) + c).exp())
                .sum::<f64>()
                / b_total
        })
        .collect();
    let shape = cache.params().shape();
    let width = 1.0 / bins as f64;
    Ok(shape
        .ranges()
        .enumerate()
        .map(|(l, range)| {
            let mut mass = vec![0.0; bins];
            for (b, w) in weights.iter().enumerate() {
                let v = cache.point(b)[range.start];
                let bin = ((v * bins as f64) as usize).min(bins - 1);
                mass[bin] += w;
            }
            MarginalGrid {
                locus: l,
                bins: mass
                    .into_iter()
                    .enumerate()
                    .map(|(i, m)| ((i as f64 + 0.5) * width, m / width))
                    .collect(),
            }
        })
        .collect())
}
