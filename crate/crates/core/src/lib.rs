//! Monte Carlo simulation of polarization-qubit dephasing in long birefringent
//! fibers, and of its suppression by CPMG and XY-4 dynamical decoupling built
//! from finite-width half-waveplates.
//!
//! The crate is organized bottom-up:
//!
//! * [`polarization`] — two-level state algebra (states, rotations, density matrices, fidelity)
//! * [`noise`] — piecewise-constant birefringence realizations and accumulated phase
//! * [`waveplate`] — refractive-index profiles, flip-angle errors and imperfect π-rotations
//! * [`schedule`] — waveplate placement for each decoupling sequence
//! * [`engine`] — single-trajectory propagation and seeded, parallel ensembles
//! * [`sweep`] — parameter sweeps and their CSV / JSON output
//! * [`config`] — JSON configuration documents

pub mod config;
pub mod engine;
pub mod error;
pub mod noise;
pub mod output;
pub mod polarization;
pub mod quadrature;
pub mod rng;
pub mod schedule;
pub mod sweep;
pub mod waveplate;

pub use config::{parse_config, serialize_config};
pub use engine::{analytic_decoherence, propagate, run_ensemble, EnsembleResult, SimConfig};
pub use error::{Error, Result};
pub use noise::{accumulated_phase, generate_profile, NoiseParams, PhaseProfile};
pub use polarization::{
    apply_dephasing, apply_rotation, ensemble_average, fidelity, DensityMatrix, PureState,
    RotationAxis, Unitary2,
};
pub use schedule::{build_schedule, Schedule, SequenceKind};
pub use sweep::{SweepResult, SweepSettings};
pub use waveplate::{ErrorMode, RefractiveIndexProfile, WaveplateSpec};

/// Default carrier wavelength (telecom band), meters.
pub const DEFAULT_WAVELENGTH: f64 = 1550e-9;
