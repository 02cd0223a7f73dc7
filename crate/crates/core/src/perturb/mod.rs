//! Jaynes-Cummings perturbation theory on cluster labels.

mod expansion;
mod label;
mod observable;
mod sweep;
mod system;

pub use expansion::{build_expansion, rank1, rank2, Expansion, ExpansionConfig};
pub use label::{ClusterLabel, PhotonEntry, QubitEntry};
pub use observable::{expectation, term_trace, Factor, Observable, Term};
pub use sweep::{
    single_constituent, sweep, sweep_infinite, sweep_point, translation_invariant_finite, QubitResponse, SweepConfig, SweepRow,
};
pub use system::JcSystem;
