//! Multiple Loewner chains driven by stochastic log-gases, the zero-boundary
//! Gaussian free field on the upper half-plane and the quadrant, and Monte
//! Carlo checks of their local coupling.
//!
//! * [`loggas`]: Dyson and Bru–Wishart particle systems and their simulation.
//! * [`rmt`]: `kappa = 4` matrix samplers used as oracles for the gases.
//! * [`loewner`]: conformal maps of the multiple Loewner chain.
//! * [`gff`]: Green functions, Dirichlet energies and a lattice field sampler.
//! * [`coupling`]: the martingale observable and the verification campaigns.
//! * [`cli`]: the batch front-end behind the `loggas-sle` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coupling;
pub mod error;
pub mod gff;
pub mod io;
pub mod loewner;
pub mod loggas;
pub mod rmt;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
