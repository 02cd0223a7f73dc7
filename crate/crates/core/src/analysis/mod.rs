//! Post-processing: result tables, resonance detection and the dimer
//! four-level model.

pub mod effective;
pub mod resonance;
pub mod table;

pub use effective::{effective_model, four_level, psi_energy_check, EffectiveConfig, EffectivePoint, EffectiveReport, FourLevel};
pub use resonance::{find_resonances, LabelWindows, DEFAULT_THRESHOLD, Resonance, ResonanceLabel, ResonanceReport};
pub use table::{compare, Deviation, Format, ResultTable, SCHEMA_VERSION};
