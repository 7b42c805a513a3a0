#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Multiscale traffic flow on periodic roads with a spatially varying
//! capacity: a follow-the-leader model, a stochastic particle model,
//! first- and second-order macroscopic models, their wave structure, and
//! uncertainty quantification for a random capacity.

pub mod analysis;
pub mod capacity;
pub mod closures;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod macroscopic;
pub mod micro;
pub mod params;
pub mod particle;
pub mod profile;
pub mod rng;
pub mod scenario;
pub mod uq;

pub use analysis::{
    sample_admissible_states, EigenDecomp, Family, RarefactionCurve, StateUHC, WaveSystem,
};
pub use capacity::{Capacity, CapacitySpec};
pub use closures::{
    headway_h, micro_speed_vtilde, pressure, speed_v, Closures, HeadwayLaw, LinearMicroSpeed,
    LinearSpeed, MicroSpeedLaw, RationalHeadway, RationalSpeed, SpeedLaw,
};
pub use error::{Result, TrafficError};
pub use field::{l1_distance, l2_distance, relative_l1, total_mass, MacroField};
pub use grid::Grid1D;
pub use macroscopic::{cfl_check, cfl_check_spec, MacroSolver};
pub use micro::{micro_init_from_density, MicroModel, MicroState};
pub use params::ModelParams;
pub use particle::{
    bin_to_fields, init_ensemble, ParticleEnsemble, ParticleInit, ParticleModel, RelaxationMode,
};
pub use profile::{PiecewiseProfile, Step};
pub use rng::RngStream;
pub use scenario::{InitialData, ModelKind, ParticleConfig, Scenario, UqConfig};
