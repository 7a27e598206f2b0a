//! Thermal quantum discord and Otto-cycle work in the multiqubit quantum
//! Rabi (Dicke) model.
//!
//! Energies are in units of a reference frequency `ω` (`ħ = 1`), temperatures
//! are `τ = k_B T / ħω`, entropies and discords are in bits.

pub mod analysis;
pub mod discord;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod otto;
pub mod statespace;
pub mod units;

pub use analysis::{
    discord_scan, discord_scan_multi, locate_extremum, power_law_fit, Extremum, ExtremumKind, Partition,
    PowerLawFit, ScanConfig, ScanRecord,
};
pub use discord::{
    conditional_entropy, measurement_unitary, mutual_information, quantum_discord, quantum_discord_ensemble,
    von_neumann_entropy, DiscordResult, MeasurementFrame,
};
pub use error::{Error, Result};
pub use model::{
    build_hamiltonian, converge_cutoff, eigendecompose, parity_operator, thermal_state, CutoffPolicy, Eigensystem,
    ModelParams, QubitConvention, Spectrum, ThermalConfig,
};
pub use optimizer::{basin_hop, local_minimize, OptimizationOutcome, OptimizerConfig};
pub use otto::{run_cycle, work_scan, CycleSpec, OttoRecord};
pub use statespace::{build_operators, build_space, partial_trace, Basis, DensityMatrix, Ensemble, SpaceDescriptor};
