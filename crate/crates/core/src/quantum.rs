//! Two-level state algebra.
//!
//! States are kept as 2×2 density matrices. Rotations follow
//! `R_n(θ) = exp(−iθ (n·σ)/2)`, so `R_x(π/2)|0⟩ = (|0⟩ − i|1⟩)/√2`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for Hermiticity, trace and eigenvalue checks on exact states.
pub const STATE_TOL: f64 = 1e-12;
/// Largest eigenvalue negativity repaired on ensemble-averaged states.
pub const AVERAGE_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn sigma_x() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Matrix2<Complex64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// Expectation values of σx, σy, σz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.z.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite Bloch vector {self:?}")));
        }
        if self.norm() > 1.0 + 1e-9 {
            return Err(Error::InvalidState(format!(
                "Bloch vector norm {} exceeds 1",
                self.norm()
            )));
        }
        Ok(())
    }
}

/// A single-qubit special-unitary matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2(pub(crate) Matrix2<Complex64>);

impl Su2 {
    pub fn identity() -> Self {
        Su2(Matrix2::identity())
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    /// `self` applied after `earlier`.
    pub fn after(&self, earlier: &Su2) -> Su2 {
        Su2(self.0 * earlier.0)
    }

    pub fn adjoint(&self) -> Su2 {
        Su2(self.0.adjoint())
    }

    /// Max-norm distance of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.0.adjoint() * self.0 - Matrix2::identity();
        p.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `exp(−i θ (n·σ)/2)` for a unit axis `n`.
    pub(crate) fn from_axis_angle(n: [f64; 3], theta: f64) -> Su2 {
        let (s, c) = (theta / 2.0).sin_cos();
        let (nx, ny, nz) = (n[0], n[1], n[2]);
        Su2(Matrix2::new(
            Complex64::new(c, -s * nz),
            Complex64::new(-s * ny, -s * nx),
            Complex64::new(s * ny, -s * nx),
            Complex64::new(c, s * nz),
        ))
    }
}

/// Rotation by `angle` radians about a unit `axis` on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    axis: [f64; 3],
    angle: f64,
}

impl Rotation {
    /// Normalizes `axis`; a zero or non-finite axis is rejected.
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !n.is_finite() || n == 0.0 || !angle.is_finite() {
            return Err(Error::InvalidInput(format!(
                "rotation needs a non-zero finite axis and finite angle, got {axis:?}, {angle}"
            )));
        }
        Ok(Self {
            axis: [axis[0] / n, axis[1] / n, axis[2] / n],
            angle,
        })
    }

    pub fn x(angle: f64) -> Self {
        Self { axis: [1.0, 0.0, 0.0], angle }
    }

    pub fn y(angle: f64) -> Self {
        Self { axis: [0.0, 1.0, 0.0], angle }
    }

    pub fn z(angle: f64) -> Self {
        Self { axis: [0.0, 0.0, 1.0], angle }
    }

    /// Rotation about the equatorial axis at azimuth `phase` (0 = X, π/2 = Y).
    pub fn equatorial(phase: f64, angle: f64) -> Self {
        let (s, c) = phase.sin_cos();
        Self { axis: [c, s, 0.0], angle }
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn unitary(&self) -> Su2 {
        Su2::from_axis_angle(self.axis, self.angle)
    }
}

/// A 2×2 Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: Matrix2<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at [`STATE_TOL`].
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        check_state(&m, STATE_TOL)?;
        Ok(Self { m })
    }

    /// Builds a state from a weighted average of exact states.
    ///
    /// Residual non-Hermiticity is symmetrized away, and eigenvalue negativity up to
    /// [`AVERAGE_TOL`] is clipped. Anything larger is an error.
    pub fn from_average(m: Matrix2<Complex64>) -> Result<Self> {
        let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = (h[(0, 0)] + h[(1, 1)]).re;
        if (tr - 1.0).abs() > AVERAGE_TOL {
            return Err(Error::InvalidState(format!("averaged trace {tr} differs from 1")));
        }
        let h = h / Complex64::new(tr, 0.0);
        let r = bloch_of(&h);
        let norm = r.norm();
        if norm > 1.0 + 2.0 * AVERAGE_TOL {
            return Err(Error::InvalidState(format!(
                "averaged state has eigenvalue {}",
                (1.0 - norm) / 2.0
            )));
        }
        if norm > 1.0 {
            let s = 1.0 / norm;
            return Ok(Self::from_bloch_unchecked(BlochVector::new(r.x * s, r.y * s, r.z * s)));
        }
        Ok(Self { m: h })
    }

    /// State from measured or averaged Bloch components, with the same repair
    /// rules as [`DensityMatrix::from_average`].
    pub fn from_bloch_estimate(v: BlochVector) -> Result<Self> {
        Self::from_average(Self::from_bloch_unchecked(v).m)
    }

    pub fn ground() -> Self {
        Self { m: Matrix2::new(ONE, ZERO, ZERO, ZERO) }
    }

    pub fn excited() -> Self {
        Self { m: Matrix2::new(ZERO, ZERO, ZERO, ONE) }
    }

    pub fn maximally_mixed() -> Self {
        Self { m: Matrix2::identity() * Complex64::new(0.5, 0.0) }
    }

    pub fn from_bloch(v: BlochVector) -> Result<Self> {
        v.validate()?;
        Ok(Self::from_bloch_unchecked(v))
    }

    fn from_bloch_unchecked(v: BlochVector) -> Self {
        let half = 0.5;
        Self {
            m: Matrix2::new(
                Complex64::new(half * (1.0 + v.z), 0.0),
                Complex64::new(half * v.x, -half * v.y),
                Complex64::new(half * v.x, half * v.y),
                Complex64::new(half * (1.0 - v.z), 0.0),
            ),
        }
    }

    pub fn elements(&self) -> &Matrix2<Complex64> {
        &self.m
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_of(&self.m)
    }

    pub fn p0(&self) -> f64 {
        self.m[(0, 0)].re
    }

    pub fn trace(&self) -> Complex64 {
        self.m[(0, 0)] + self.m[(1, 1)]
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let r = self.bloch().norm();
        [(1.0 - r) / 2.0, (1.0 + r) / 2.0]
    }

    pub fn purity(&self) -> f64 {
        let r = self.bloch().norm();
        (1.0 + r * r) / 2.0
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &Su2) -> Self {
        Self { m: u.0 * self.m * u.0.adjoint() }
    }

    /// Largest entry-wise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (self.m - other.m).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn bloch_of(m: &Matrix2<Complex64>) -> BlochVector {
    // ρ01 = (x − iy)/2
    BlochVector::new(
        2.0 * m[(0, 1)].re,
        -2.0 * m[(0, 1)].im,
        (m[(0, 0)] - m[(1, 1)]).re,
    )
}

fn check_state(m: &Matrix2<Complex64>, tol: f64) -> Result<()> {
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidState("non-finite matrix element".into()));
    }
    let herm = (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if herm > tol {
        return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
    }
    let tr = m[(0, 0)] + m[(1, 1)];
    if (tr - ONE).norm() > tol {
        return Err(Error::InvalidState(format!("trace {tr} is not 1")));
    }
    let r = bloch_of(m).norm();
    let min_eig = (1.0 - r) / 2.0;
    if min_eig < -tol {
        return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
    }
    Ok(())
}

pub fn density_from_bloch(v: BlochVector) -> Result<DensityMatrix> {
    DensityMatrix::from_bloch(v)
}

pub fn bloch_from_density(rho: &DensityMatrix) -> BlochVector {
    rho.bloch()
}

/// Half the trace norm of `ρ1 − ρ2`.
///
/// The difference is traceless and Hermitian, so its eigenvalues are `±‖Δr‖/2`
/// and the trace norm reduces to the Bloch-vector distance.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> f64 {
    let d = rho1.m - rho2.m;
    // eigenvalues of a traceless Hermitian 2×2: ±sqrt(a² + |b|²)
    let a = d[(0, 0)].re;
    let b = d[(0, 1)];
    (a * a + b.norm_sqr()).sqrt().min(1.0)
}

pub fn apply_rotation(rho: &DensityMatrix, r: &Rotation) -> DensityMatrix {
    rho.conjugate(&r.unitary())
}

pub fn population_p0(rho: &DensityMatrix) -> f64 {
    rho.p0()
}
