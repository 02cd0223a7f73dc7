//! Steady states of driven-dissipative Jaynes-Cummings lattices from resummed
//! Lindblad perturbation theory, with exact dense and trajectory oracles.

pub mod analysis;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod oracle;
pub mod perturb;
pub mod resum;
pub mod unperturbed;

pub use error::{Error, Result};
pub use lattice::{build_modes, infinite_mode_density, spectral_function, Geometry, LatticeSpec, ModeBasis, ModelParams, Sites};
pub use num_complex::Complex64;
pub use perturb::{ClusterLabel, Expansion, JcSystem, Observable};
pub use unperturbed::{displacement, qubit_eigensystem, Displacement, QubitEigensystem};
