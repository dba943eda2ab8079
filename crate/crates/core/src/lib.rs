//! Duality-based optimal filtering and marginal smoothing for coupled
//! Wright-Fisher (c-WF) diffusions observed through multinomial sampling.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: loci layout, simplex points, multi-indices, drift and
//!   diffusion coefficients, and the generator applied to monomials.
//! * [`constants`]: Monte Carlo estimation of the tilted-Dirichlet
//!   integrals `C̃(m)` and everything derived from them (`k(m)`, `C_{m,n}`,
//!   observation marginals, component densities and means).
//! * [`dual`]: jump rates of the dual process, Gillespie paths, empirical
//!   transition probabilities and pruning.
//! * [`diffusion`]: forward simulation of the signal and of observations.
//! * [`filtering`] and [`smoothing`]: the mixture recursions.
//! * [`config`] and [`io`]: experiment configuration and file formats used
//!   by the `cwf` binary.

pub mod config;
pub mod constants;
pub mod diffusion;
pub mod dual;
pub mod error;
pub mod filtering;
pub mod grid;
pub mod io;
pub mod model;
pub mod seed;
pub mod smoothing;

pub use error::{Error, Result};
