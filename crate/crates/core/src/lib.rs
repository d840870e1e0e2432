//! Robustness of magic for noisy hypergraph states.
//!
//! Exact values come from a linear program over all stabilizer states at
//! small qubit counts; analytic upper and lower bounds cover large systems;
//! qudit states are handled through discrete Wigner negativity.

pub mod bounds;
pub mod certificates;
pub mod error;
pub mod hypergraph;
pub mod lp;
pub mod pauli;
pub mod rom;
pub mod stabilizer;
pub mod wigner;

pub use error::{Error, Result};
pub use hypergraph::{Hypergraph, TraceTerm};
pub use pauli::{NoiseModel, PauliVector};
pub use stabilizer::{StabilizerBasis, StabilizerLabel};
