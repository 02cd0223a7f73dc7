//! Exact references for small lattices: steady states from the full
//! Liouvillian and Monte-Carlo wavefunction trajectories.

mod dense;
mod fock;
mod indexed;
mod mcwf;
mod sweeps;

pub use dense::{
    dense_steady_state, displaced_model, site_model, steady_state, ExactObservables, ExactSolution, JcModel, Liouvillian,
    LindbladModel, SteadyOptions, SteadyState,
};
pub use indexed::{indexed_model, IndexedModel, MAX_SUPEROP_DIM};
pub use fock::{destroy, sigma_minus, TensorLayout};
pub use mcwf::{mcwf_run, TrajectoryConfig, TrajectoryResult};
pub use sweeps::{dense_sweep, mcwf_sweep};
