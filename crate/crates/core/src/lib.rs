//! Amplitude of the first Dirichlet eigenvector of absorbing Markov generators.
//!
//! For a generator on `S ∪ {∞}` whose restriction `K` to `S` is irreducible,
//! the positive eigenvector `φ` of `K` has amplitude `max φ / min φ`. This
//! crate computes it, evaluates path and spectral upper bounds on it, checks
//! its probabilistic representation by simulation, and extends the spectral
//! bound to denumerable birth–death chains through reflected truncations.

pub mod birth_death;
pub mod bounds;
pub mod error;
pub mod generator;
pub mod io;
pub mod linalg;
pub mod reproduce;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use generator::{
    build_graph_walk, build_rho_chain, AbsorbingGenerator, BirthDeathChain, Minor, Path, RateMatrix, Transition,
};
pub use spectral::{
    amplitude, dirichlet_eigenpair, full_spectrum, quasi_stationary_dist, DirichletEigenpair, Normalization,
    QuasiStationaryDist, SpectrumReport,
};
