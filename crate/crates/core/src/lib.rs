//! Thermodynamic formalism and multifractal analysis on subshifts of
//! finite type.
//!
//! The library computes, for a symbolically coded uniformly expanding
//! system given by a pair of locally constant potentials `(g, log|Jac f|)`
//! with `g` normalized to zero pressure:
//!
//! * the pressure function `P(q, t)` of the family `q·g − t·log|Jac f|`
//!   and its equilibrium (Gibbs) states, via weighted transition matrices
//!   ([`transfer`]);
//! * the temperature function `T(q)` solving `P(q, T(q)) = 0`, its
//!   derivatives, and the level parameter `alpha(q)` ([`temperature`]);
//! * the dimension spectrum `S(alpha(q)) = T(q) + q·alpha(q)`, Legendre
//!   duality residuals, spectrum endpoints and variational checks
//!   ([`spectrum`]);
//! * trajectory-level verification: Birkhoff-ratio level sets, stopping
//!   times, empirical Gibbs checks and irregular-point constructions
//!   ([`orbit`]).
//!
//! Everything is exact matrix computation at desk scale: alphabets up to
//! 64 symbols, cylinder depths up to 16, dense enumeration throughout.
//! All types are immutable after construction and all operations are pure;
//! stochastic operations take explicit seeds and are deterministic per
//! seed.

pub mod error;
mod linalg;
pub mod orbit;
pub mod potential;
pub mod sft;
pub mod spectrum;
pub mod systems;
pub mod temperature;
pub mod transfer;

pub use error::{Error, Result};
pub use potential::{normalize_to_zero_pressure, JacobianPotential, Potential, PotentialFamily};
pub use sft::{PeriodicOrbit, Sft, Word};
pub use transfer::{
    asymptotic_variance, conformality_check, equilibrium_state, gibbs_certificate, perron,
    pressure, weighted_matrix, GibbsCertificate, MarkovMeasure, PerronData, VarianceConvention,
};
