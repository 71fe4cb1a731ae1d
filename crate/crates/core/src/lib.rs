//! Forward and inverse spectral computations for Sturm-Liouville operators
//! with distributional potentials in quasi-derivative form.
//!
//! The differential expression is
//!
//! ```text
//! tau f = (1/r) ( -(p[f' + s f])' + s p[f' + s f] + q f )
//! ```
//!
//! on a finite interval with piecewise-polynomial coefficients `(p, q, r, s)`,
//! `p != 0`, `r > 0`. Working with the pair `(f, f^[1])`, `f^[1] = p[f'+sf]`,
//! admits distributional potentials `-(sp)' + s^2 p + q` (deltas from steps
//! in `s`) while keeping all numerics on locally integrable data.
//!
//! Modules:
//! - [`coefficients`]: the coefficient quadruple, validation, weak pairings
//! - [`quasi_ode`]: the 2x2 first-order system, Wronskians, Lagrange identity
//! - [`spectral`]: fundamental systems, eigenvalues, Weyl m-functions,
//!   spectral measures and the associated transform
//! - [`debranges`]: the entire function `E(z,c)` and reproducing kernels
//! - [`transforms`]: Liouville, gauge and impedance transforms
//! - [`inverse_verify`]: two-spectra, three-spectra and local decay checks
//! - [`asymptotics`]: high-energy behavior of solutions and m-functions
//! - [`config`]: JSON problem descriptions for the CLI

pub mod asymptotics;
pub mod coefficients;
pub mod config;
pub mod debranges;
pub mod error;
pub mod inverse_verify;
pub mod ode;
pub mod poly;
pub mod quad;
pub mod quasi_ode;
pub mod spectral;
pub mod transforms;

pub use coefficients::{CoefficientSet, EnergyPoint, PiecewiseCoefficient};
pub use error::{Error, Result};
pub use quasi_ode::{QuasiState, SolutionTrace};
