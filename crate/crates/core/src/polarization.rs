//! Two-level polarization algebra.
//!
//! States are pure |H⟩/|V⟩ amplitude pairs. Rotations follow the half-angle
//! convention `U = exp(-i σ θ / 2) = cos(θ/2)·I - i·sin(θ/2)·σ`, so a π rotation
//! about x acts as `-iσx`. Global phases are never tracked as observables:
//! everything downstream goes through density matrices or fidelities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::Mul;

use crate::error::{Error, Result};

/// Internal tolerance for norms, traces and hermiticity.
pub const TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Normalized polarization state `alpha|H⟩ + beta|V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    alpha: Complex64,
    beta: Complex64,
}

impl PureState {
    /// Builds a state, rejecting amplitudes whose squared norm is off by more than 1e-12.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let s = PureState { alpha, beta };
        s.check()?;
        Ok(s)
    }

    /// Builds a state from arbitrary nonzero amplitudes, rescaling to unit norm.
    ///
    /// Amplitudes that are already normalized within tolerance are kept bit-for-bit.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n2 = alpha.norm_sqr() + beta.norm_sqr();
        if !n2.is_finite() || n2 == 0.0 {
            return Err(Error::invalid(
                "state amplitudes must be finite and not both zero",
            ));
        }
        if (n2 - 1.0).abs() <= TOLERANCE {
            return Ok(PureState { alpha, beta });
        }
        let n = n2.sqrt();
        Ok(PureState {
            alpha: alpha / n,
            beta: beta / n,
        })
    }

    pub fn horizontal() -> Self {
        PureState {
            alpha: ONE,
            beta: ZERO,
        }
    }

    pub fn vertical() -> Self {
        PureState {
            alpha: ZERO,
            beta: ONE,
        }
    }

    /// `(|H⟩ + |V⟩)/√2`, the default input state.
    pub fn plus() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        PureState { alpha: h, beta: h }
    }

    /// `(|H⟩ - |V⟩)/√2`
    pub fn minus() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        PureState { alpha: h, beta: -h }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.alpha.conj() * other.alpha + self.beta.conj() * other.beta
    }

    /// `|⟨self|other⟩|²`, the pure-state fidelity.
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Multiplies both amplitudes by `e^{iφ}`.
    pub fn with_global_phase(&self, phi: f64) -> PureState {
        let p = Complex64::from_polar(1.0, phi);
        PureState {
            alpha: self.alpha * p,
            beta: self.beta * p,
        }
    }

    fn check(&self) -> Result<()> {
        let n2 = self.norm_sqr();
        if !n2.is_finite() || (n2 - 1.0).abs() > TOLERANCE {
            return Err(Error::invalid(format!(
                "state is not normalized (|alpha|^2 + |beta|^2 = {n2})"
            )));
        }
        Ok(())
    }
}

/// Axis of a polarization rotation. `MinusX` is `X` with the angle negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotationAxis {
    X,
    MinusX,
    Y,
    Z,
}

impl RotationAxis {
    pub fn label(&self) -> &'static str {
        match self {
            RotationAxis::X => "X",
            RotationAxis::MinusX => "-X",
            RotationAxis::Y => "Y",
            RotationAxis::Z => "Z",
        }
    }
}

impl std::fmt::Display for RotationAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A 2×2 complex matrix acting on polarization states, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[Complex64; 2]; 2],
}

impl Unitary2 {
    pub fn from_entries(m: [[Complex64; 2]; 2]) -> Self {
        Unitary2 { m }
    }

    pub fn identity() -> Self {
        Unitary2 {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    /// `exp(-i σ_axis θ / 2)`
    pub fn rotation(axis: RotationAxis, angle: f64) -> Self {
        let (axis, angle) = match axis {
            RotationAxis::MinusX => (RotationAxis::X, -angle),
            a => (a, angle),
        };
        let c = Complex64::new((angle / 2.0).cos(), 0.0);
        let s = (angle / 2.0).sin();
        let m = match axis {
            RotationAxis::X => {
                let off = Complex64::new(0.0, -s);
                [[c, off], [off, c]]
            }
            RotationAxis::Y => [[c, Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), c]],
            RotationAxis::Z => [
                [Complex64::new(c.re, -s), ZERO],
                [ZERO, Complex64::new(c.re, s)],
            ],
            RotationAxis::MinusX => unreachable!(),
        };
        Unitary2 { m }
    }

    /// Relative phase `diag(e^{-iφ/2}, e^{iφ/2})` between |H⟩ and |V⟩.
    pub fn dephasing(phase: f64) -> Self {
        Unitary2::rotation(RotationAxis::Z, phase)
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Unitary2 {
            m: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    /// Applies the matrix without checking the input norm.
    pub fn apply(&self, s: &PureState) -> PureState {
        let m = &self.m;
        PureState {
            alpha: m[0][0] * s.alpha + m[0][1] * s.beta,
            beta: m[1][0] * s.alpha + m[1][1] * s.beta,
        }
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.dagger() * *self;
        let id = Unitary2::identity();
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((p.m[i][j] - id.m[i][j]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= TOLERANCE
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        let a = &self.m;
        let b = &rhs.m;
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Unitary2 { m }
    }
}

fn check_angle(angle: f64) -> Result<()> {
    if !angle.is_finite() {
        return Err(Error::invalid(format!(
            "rotation angle must be finite, got {angle}"
        )));
    }
    Ok(())
}

/// Rotates `state` by `angle` radians about `axis`.
pub fn apply_rotation(state: &PureState, axis: RotationAxis, angle: f64) -> Result<PureState> {
    check_angle(angle)?;
    state.check()?;
    Ok(Unitary2::rotation(axis, angle).apply(state))
}

/// Free-propagation dephasing: |H⟩ and |V⟩ acquire a relative phase.
pub fn apply_dephasing(state: &PureState, relative_phase: f64) -> Result<PureState> {
    apply_rotation(state, RotationAxis::Z, relative_phase)
}

/// 2×2 density matrix, row-major over the |H⟩, |V⟩ basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: [[Complex64; 2]; 2],
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity (all within 1e-12).
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let rho = DensityMatrix { m };
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_pure(s: &PureState) -> Self {
        DensityMatrix {
            m: [
                [s.alpha * s.alpha.conj(), s.alpha * s.beta.conj()],
                [s.beta * s.alpha.conj(), s.beta * s.beta.conj()],
            ],
        }
    }

    pub fn maximally_mixed() -> Self {
        let half = Complex64::new(0.5, 0.0);
        DensityMatrix {
            m: [[half, ZERO], [ZERO, half]],
        }
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = (self.m[0][1] + self.m[1][0].conj()) * 0.5;
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    /// Returns a copy with off-diagonal coherences multiplied by `factor`.
    pub fn with_coherence_scaled(&self, factor: f64) -> Result<Self> {
        let mut m = self.m;
        m[0][1] *= factor;
        m[1][0] *= factor;
        DensityMatrix::new(m)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.m;
        let herm = (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs());
        if !herm.is_finite() || herm > TOLERANCE {
            return Err(Error::invalid(format!(
                "density matrix is not Hermitian (defect {herm})"
            )));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > TOLERANCE {
            return Err(Error::invalid(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let [low, _] = self.eigenvalues();
        if low < -TOLERANCE {
            return Err(Error::invalid(format!(
                "density matrix has negative eigenvalue {low}"
            )));
        }
        Ok(())
    }
}

/// `ρ = (1/n) Σ |ψ_i⟩⟨ψ_i|`, summed in slice order.
pub fn ensemble_average(states: &[PureState]) -> Result<DensityMatrix> {
    if states.is_empty() {
        return Err(Error::invalid("cannot average an empty ensemble"));
    }
    let mut acc = [[ZERO; 2]; 2];
    for s in states {
        s.check()?;
        let p = DensityMatrix::from_pure(s).m;
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += p[i][j];
            }
        }
    }
    let n = states.len() as f64;
    for row in acc.iter_mut() {
        for c in row.iter_mut() {
            *c /= n;
        }
    }
    // Exact hermiticity and real diagonal; the sums above only differ by rounding.
    acc[0][0].im = 0.0;
    acc[1][1].im = 0.0;
    acc[1][0] = acc[0][1].conj();
    Ok(DensityMatrix { m: acc })
}

/// `⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`.
pub fn fidelity(input: &PureState, rho: &DensityMatrix) -> f64 {
    let m = &rho.m;
    let a = input.alpha;
    let b = input.beta;
    let v = a.conj() * (m[0][0] * a + m[0][1] * b) + b.conj() * (m[1][0] * a + m[1][1] * b);
    v.re.clamp(0.0, 1.0)
}
