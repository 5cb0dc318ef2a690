//! Trajectory propagation and Monte Carlo ensembles.
//!
//! One trajectory walks the fiber left to right: dephase over the gap up to
//! the next waveplate, apply the waveplate, repeat, then dephase over the
//! tail. An ensemble draws one birefringence realization per trajectory from
//! substream `mix(master_seed, i)` (see [`crate::rng`]) and averages the
//! output states in realization order, so results do not depend on how many
//! worker threads run it.

use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::noise::{generate_profile, integrate_delta_n, NoiseParams, PhaseProfile};
use crate::polarization::{
    ensemble_average, fidelity, DensityMatrix, PureState, RotationAxis, Unitary2,
};
use crate::rng;
use crate::schedule::{build_schedule, Schedule, SequenceKind};
use crate::waveplate::{flip_angle_error, unitary_with_error, WaveplateSpec};

/// Everything needed to run one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub input_state: PureState,
    /// Meters.
    pub fiber_length: f64,
    pub noise: NoiseParams,
    pub sequence: SequenceKind,
    pub num_waveplates: usize,
    /// Template plate; its axis is replaced by each schedule entry's axis.
    pub waveplate: WaveplateSpec,
    pub realizations: usize,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fiber_length.is_finite() && self.fiber_length > 0.0) {
            return Err(Error::invalid(format!(
                "fiber_length must be > 0, got {}",
                self.fiber_length
            )));
        }
        if self.realizations == 0 {
            return Err(Error::invalid("realizations must be >= 1"));
        }
        self.noise.validate()?;
        self.sequence.check_count(self.num_waveplates)?;
        self.waveplate.validate()?;
        let n2 = self.input_state.norm_sqr();
        if (n2 - 1.0).abs() > crate::polarization::TOLERANCE {
            return Err(Error::invalid("input state is not normalized"));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<Schedule> {
        build_schedule(self.sequence, self.fiber_length, self.num_waveplates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleResult {
    pub rho_out: DensityMatrix,
    pub fidelity: f64,
    /// Sample standard deviation of per-realization fidelities over `√n` (0 for n = 1).
    pub fidelity_std_error: f64,
    pub realizations: usize,
}

/// Schedule plus the plate unitaries it needs, prepared once per ensemble.
#[derive(Debug, Clone)]
pub struct Propagator {
    schedule: Schedule,
    plates: Vec<Unitary2>,
    wavelength: f64,
}

impl Propagator {
    pub fn new(schedule: Schedule, waveplate: &WaveplateSpec, wavelength: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::invalid(format!(
                "wavelength must be > 0, got {wavelength}"
            )));
        }
        let err = flip_angle_error(waveplate)?;
        let for_axis = |axis: RotationAxis| unitary_with_error(axis, err);
        let (ux, uy) = (for_axis(RotationAxis::X), for_axis(RotationAxis::Y));
        let plates = schedule
            .entries
            .iter()
            .map(|e| match e.axis {
                RotationAxis::X => ux,
                RotationAxis::Y => uy,
                a => for_axis(a),
            })
            .collect();
        Ok(Propagator {
            schedule,
            plates,
            wavelength,
        })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn run(&self, input: &PureState, profile: &PhaseProfile) -> Result<PureState> {
        let total = profile.total_length();
        let length = self.schedule.fiber_length;
        if (total - length).abs() > 1e-9 * length.max(1.0) {
            return Err(Error::invalid(format!(
                "profile length {total} m does not match schedule length {length} m"
            )));
        }
        let k = TAU / self.wavelength;
        let mut state = *input;
        let mut x = 0.0;
        for (entry, plate) in self.schedule.entries.iter().zip(&self.plates) {
            let to = entry.position.min(total);
            state = Unitary2::dephasing(k * integrate_delta_n(profile, x, to)).apply(&state);
            state = plate.apply(&state);
            x = to;
        }
        state = Unitary2::dephasing(k * integrate_delta_n(profile, x, total)).apply(&state);
        Ok(state)
    }
}

/// Propagates one input state through one birefringence realization.
pub fn propagate(
    input: &PureState,
    profile: &PhaseProfile,
    schedule: &Schedule,
    waveplate: &WaveplateSpec,
    wavelength: f64,
) -> Result<PureState> {
    Propagator::new(schedule.clone(), waveplate, wavelength)?.run(input, profile)
}

/// Substream seed of realization `index`.
pub fn realization_seed(master_seed: u64, index: usize) -> u64 {
    rng::mix(master_seed, index as u64)
}

/// Output state of a single realization of `config`.
pub fn run_realization(
    config: &SimConfig,
    propagator: &Propagator,
    index: usize,
) -> Result<PureState> {
    let profile = generate_profile(
        &config.noise,
        config.fiber_length,
        realization_seed(config.master_seed, index),
    )?;
    propagator.run(&config.input_state, &profile)
}

/// Runs `config.realizations` trajectories on the current rayon pool.
pub fn run_ensemble(config: &SimConfig) -> Result<EnsembleResult> {
    config.validate()?;
    let propagator = Propagator::new(
        config.schedule()?,
        &config.waveplate,
        config.noise.wavelength,
    )?;
    let outputs = (0..config.realizations)
        .into_par_iter()
        .map(|i| run_realization(config, &propagator, i))
        .collect::<Result<Vec<_>>>()?;
    summarize(&config.input_state, &outputs)
}

/// Averages output states (in slice order) and scores them against `input`.
pub fn summarize(input: &PureState, outputs: &[PureState]) -> Result<EnsembleResult> {
    let rho_out = ensemble_average(outputs)?;
    let n = outputs.len();
    let per: Vec<f64> = outputs.iter().map(|s| input.overlap(s)).collect();
    let mean = per.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = per.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(EnsembleResult {
        rho_out,
        fidelity: fidelity(input, &rho_out),
        fidelity_std_error: std_error,
        realizations: n,
    })
}

/// Expected coherence attenuation `exp(-variance/2)` for a Gaussian total phase.
pub fn analytic_decoherence(total_phase_variance: f64) -> Result<f64> {
    if total_phase_variance.is_nan() || total_phase_variance < 0.0 {
        return Err(Error::invalid(format!(
            "phase variance must be >= 0, got {total_phase_variance}"
        )));
    }
    Ok((-0.5 * total_phase_variance).exp())
}

/// `|+⟩` fidelity `(1 + D)/2` implied by [`analytic_decoherence`].
pub fn analytic_plus_fidelity(total_phase_variance: f64) -> Result<f64> {
    Ok(0.5 * (1.0 + analytic_decoherence(total_phase_variance)?))
}
