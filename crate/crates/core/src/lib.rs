//! Coherent energy transfer from a charger two-level system to a battery
//! two-level system, either directly or through a mediating two-level
//! system.
//!
//! The crate provides closed-form evolution for the resonant step-switched
//! protocols ([`analytic`]) and an independent numerical propagator
//! ([`propagator`]) for the reduced single-excitation model and the full
//! tensor-product model, with or without counter-rotating terms.

pub mod analytic;
pub mod error;
pub mod model;
pub mod propagator;
pub mod switching;

pub use analytic::{transfer_time, Energies, TransferReport};
pub use error::{Error, Result};
pub use model::{
    FullState, HamiltonianMatrix, ModelVariant, ReducedState, Scenario, Site, StateVector,
    SystemSpec, C64,
};
pub use propagator::{
    battery_power, compare_traces, energies_from_states, find_first_maximum, interaction_energy,
    locate_first_maximum, propagate_piecewise, propagate_rk4, EnergyTrace, Rk4Run, TimeGrid,
    TraceComparison, TraceSource,
};
pub use switching::{
    make_protocol_schedule, CouplingProfile, Drive, ProtocolSchedule, SwitchingSchedule, TauChoice,
    Window,
};
