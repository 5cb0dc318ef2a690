//! Finite-width half-waveplates.
//!
//! A waveplate is a π rotation about its optic axis plus a collinear
//! flip-angle error `Δθ`. In calibrated mode `Δθ = kappa · ∫ ΔN(x) dx` over
//! the profile domain; in direct mode `Δθ = epsilon · π`.
//!
//! Profile domains are dimensionless: Gaussian and rectangular live on
//! `[0, width]`, the tanh profile on `[-1, 1]` regardless of `width`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::polarization::{RotationAxis, Unitary2};
use crate::quadrature::adaptive_simpson;

/// Absolute tolerance for profile integrals.
pub const INTEGRAL_TOLERANCE: f64 = 1e-10;

/// Number of points in a profile dump.
pub const PROFILE_DUMP_POINTS: usize = 512;

/// Calibration for which a width-2 rectangular plate has a 5% flip-angle error.
pub const REFERENCE_KAPPA: f64 = 0.025 * PI;

/// Shape of the index modulation `ΔN(x)` inside a waveplate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RefractiveIndexProfile {
    Gaussian { x0: f64, sigma: f64 },
    Rectangular,
    Tanh { a: f64 },
    Ideal,
}

impl RefractiveIndexProfile {
    pub fn name(&self) -> &'static str {
        match self {
            RefractiveIndexProfile::Gaussian { .. } => "gaussian",
            RefractiveIndexProfile::Rectangular => "rectangular",
            RefractiveIndexProfile::Tanh { .. } => "tanh",
            RefractiveIndexProfile::Ideal => "ideal",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RefractiveIndexProfile::Gaussian { x0, sigma } => {
                if !x0.is_finite() {
                    return Err(Error::invalid(format!(
                        "gaussian x0 must be finite, got {x0}"
                    )));
                }
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::invalid(format!(
                        "gaussian sigma must be > 0, got {sigma}"
                    )));
                }
            }
            RefractiveIndexProfile::Tanh { a } => {
                if !(a.is_finite() && a > 0.0) {
                    return Err(Error::invalid(format!("tanh slope a must be > 0, got {a}")));
                }
            }
            RefractiveIndexProfile::Rectangular | RefractiveIndexProfile::Ideal => {}
        }
        Ok(())
    }

    /// Support of the profile for a plate of the given width.
    pub fn domain(&self, width: f64) -> (f64, f64) {
        match self {
            RefractiveIndexProfile::Gaussian { .. } | RefractiveIndexProfile::Rectangular => {
                (0.0, width)
            }
            RefractiveIndexProfile::Tanh { .. } => (-1.0, 1.0),
            RefractiveIndexProfile::Ideal => (0.0, 0.0),
        }
    }
}

/// `ΔN(x)`; zero outside the profile domain.
pub fn profile_value(profile: &RefractiveIndexProfile, x: f64, width: f64) -> f64 {
    let (lo, hi) = profile.domain(width);
    if !(lo..=hi).contains(&x) {
        return 0.0;
    }
    match *profile {
        RefractiveIndexProfile::Gaussian { x0, sigma } => {
            (-(x - x0) * (x - x0) / (2.0 * sigma * sigma)).exp()
        }
        RefractiveIndexProfile::Rectangular => 1.0,
        RefractiveIndexProfile::Tanh { a } => {
            (a * (x + 1.0) + 1.0).tanh() * (-a * (x - 1.0) + 1.0).tanh()
        }
        RefractiveIndexProfile::Ideal => 0.0,
    }
}

/// `∫ ΔN(x) dx` over the profile domain.
pub fn profile_integral(profile: &RefractiveIndexProfile, width: f64) -> f64 {
    match profile {
        RefractiveIndexProfile::Ideal => 0.0,
        _ => {
            let (lo, hi) = profile.domain(width);
            adaptive_simpson(
                |x| profile_value(profile, x, width),
                lo,
                hi,
                INTEGRAL_TOLERANCE,
            )
        }
    }
}

/// How the flip-angle error of a plate is determined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// `Δθ = kappa · ∫ΔN` (kappa in radians per unit integral).
    Calibrated { kappa: f64 },
    /// `Δθ = epsilon · π`.
    Direct { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveplateSpec {
    pub axis: RotationAxis,
    pub profile: RefractiveIndexProfile,
    pub width: f64,
    pub error_mode: ErrorMode,
}

impl WaveplateSpec {
    pub fn ideal(axis: RotationAxis) -> Self {
        WaveplateSpec {
            axis,
            profile: RefractiveIndexProfile::Ideal,
            width: 0.0,
            error_mode: ErrorMode::Direct { epsilon: 0.0 },
        }
    }

    /// A plate with a fixed fractional flip-angle error.
    pub fn direct(axis: RotationAxis, epsilon: f64) -> Self {
        WaveplateSpec {
            axis,
            profile: RefractiveIndexProfile::Rectangular,
            width: 2.0,
            error_mode: ErrorMode::Direct { epsilon },
        }
    }

    pub fn calibrated(
        axis: RotationAxis,
        profile: RefractiveIndexProfile,
        width: f64,
        kappa: f64,
    ) -> Self {
        WaveplateSpec {
            axis,
            profile,
            width,
            error_mode: ErrorMode::Calibrated { kappa },
        }
    }

    pub fn with_axis(&self, axis: RotationAxis) -> Self {
        WaveplateSpec { axis, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if !(self.width.is_finite() && self.width >= 0.0) {
            return Err(Error::invalid(format!(
                "waveplate width must be >= 0, got {}",
                self.width
            )));
        }
        match self.error_mode {
            ErrorMode::Direct { epsilon } if !(epsilon.is_finite() && epsilon >= 0.0) => Err(
                Error::invalid(format!("direct epsilon must be >= 0, got {epsilon}")),
            ),
            ErrorMode::Calibrated { kappa } if !(kappa.is_finite() && kappa >= 0.0) => Err(
                Error::invalid(format!("calibrated kappa must be >= 0, got {kappa}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Deviation of the plate's rotation angle from π, radians.
pub fn flip_angle_error(spec: &WaveplateSpec) -> Result<f64> {
    spec.validate()?;
    if spec.profile == RefractiveIndexProfile::Ideal {
        return Ok(0.0);
    }
    Ok(match spec.error_mode {
        ErrorMode::Direct { epsilon } => epsilon * PI,
        ErrorMode::Calibrated { kappa } => kappa * profile_integral(&spec.profile, spec.width),
    })
}

/// `exp(-i Δθ σ/2) · exp(-i π σ/2)` about the plate's axis.
pub fn waveplate_unitary(spec: &WaveplateSpec) -> Result<Unitary2> {
    let err = flip_angle_error(spec)?;
    Ok(unitary_with_error(spec.axis, err))
}

/// π rotation about `axis` followed by a collinear error rotation of `error` radians.
pub fn unitary_with_error(axis: RotationAxis, error: f64) -> Unitary2 {
    let ideal = Unitary2::rotation(axis, PI);
    if error == 0.0 {
        return ideal;
    }
    Unitary2::rotation(axis, error) * ideal
}

/// Writes `x,delta_N` at 512 evenly spaced points spanning the profile domain.
pub fn write_profile_csv<W: Write>(
    profile: &RefractiveIndexProfile,
    width: f64,
    mut w: W,
) -> Result<()> {
    profile.validate()?;
    let (lo, hi) = match profile {
        // nothing to plot; show the nominal width
        RefractiveIndexProfile::Ideal => (0.0, width),
        p => p.domain(width),
    };
    writeln!(w, "x,delta_N")?;
    let step = (hi - lo) / (PROFILE_DUMP_POINTS - 1) as f64;
    for k in 0..PROFILE_DUMP_POINTS {
        let x = if k + 1 == PROFILE_DUMP_POINTS {
            hi
        } else {
            lo + k as f64 * step
        };
        writeln!(
            w,
            "{},{}",
            crate::output::real(x),
            crate::output::real(profile_value(profile, x, width))
        )?;
    }
    Ok(())
}
