//! Two-level linear algebra in Pauli-coefficient form.
//!
//! Operators are stored as `A = c0·I + cx·σ_x + cy·σ_y + cz·σ_z` with real
//! coefficients, so every [`QubitOperator`] is Hermitian. Density matrices
//! store only `ρ11` and `ρ12`; `ρ22 = 1 − ρ11` and `ρ21 = conj(ρ12)` are
//! implied, so the trace is exactly one.
//!
//! Bloch coordinates follow `x = 2 Re ρ12`, `y = 2 Im ρ12`, `z = 2ρ11 − 1`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the physical-set checks of stored states.
pub const STATE_TOLERANCE: f64 = 1e-12;

type Mat2 = [[Complex64; 2]; 2];

#[cfg(test)]
fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[cfg(test)]
fn adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Conditional (or ensemble) qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    rho11: f64,
    rho12: Complex64,
}

impl DensityMatrix {
    pub fn new(rho11: f64, rho12: Complex64) -> Result<Self> {
        let rho = Self { rho11, rho12 };
        rho.check()?;
        Ok(rho)
    }

    /// Builds a state without validation; callers guarantee physicality.
    pub(crate) fn from_raw(rho11: f64, rho12: Complex64) -> Self {
        Self { rho11, rho12 }
    }

    fn check(&self) -> Result<()> {
        if !self.rho11.is_finite() || !self.rho12.re.is_finite() || !self.rho12.im.is_finite() {
            return Err(Error::InvalidState("non-finite matrix element".into()));
        }
        if self.rho11 < -STATE_TOLERANCE || self.rho11 > 1.0 + STATE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "rho11 = {} outside [0, 1]",
                self.rho11
            )));
        }
        let excess = self.positivity_excess();
        if excess > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "|rho12|² exceeds rho11·rho22 by {excess:e}"
            )));
        }
        Ok(())
    }

    /// `|1⟩⟨1|`
    pub fn ket1() -> Self {
        Self::from_raw(1.0, Complex64::new(0.0, 0.0))
    }

    /// `|2⟩⟨2|`
    pub fn ket2() -> Self {
        Self::from_raw(0.0, Complex64::new(0.0, 0.0))
    }

    pub fn maximally_mixed() -> Self {
        Self::from_raw(0.5, Complex64::new(0.0, 0.0))
    }

    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(0.5 * (1.0 + z), Complex64::new(0.5 * x, 0.5 * y))
    }

    /// Interprets a unit-trace operator as a state. Fails if `c0 ≠ 1/2` or
    /// the operator is not positive.
    pub fn from_operator(op: &QubitOperator) -> Result<Self> {
        if (op.c0 - 0.5).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "trace {} is not one",
                2.0 * op.c0
            )));
        }
        Self::new(0.5 + op.cz, Complex64::new(op.cx, -op.cy))
    }

    pub fn rho11(&self) -> f64 {
        self.rho11
    }

    pub fn rho22(&self) -> f64 {
        1.0 - self.rho11
    }

    pub fn rho12(&self) -> Complex64 {
        self.rho12
    }

    pub fn rho21(&self) -> Complex64 {
        self.rho12.conj()
    }

    pub fn bloch(&self) -> [f64; 3] {
        [
            2.0 * self.rho12.re,
            2.0 * self.rho12.im,
            2.0 * self.rho11 - 1.0,
        ]
    }

    pub fn bloch_norm_sqr(&self) -> f64 {
        let [x, y, z] = self.bloch();
        x * x + y * y + z * z
    }

    /// `|ρ12|² − ρ11 ρ22`; positive values are unphysical.
    pub fn positivity_excess(&self) -> f64 {
        self.rho12.norm_sqr() - self.rho11 * (1.0 - self.rho11)
    }

    pub fn purity(&self) -> f64 {
        0.5 * (1.0 + self.bloch_norm_sqr())
    }

    /// Full matrix `[[ρ11, ρ12], [ρ21, ρ22]]`.
    pub fn matrix(&self) -> Mat2 {
        [
            [Complex64::new(self.rho11, 0.0), self.rho12],
            [self.rho12.conj(), Complex64::new(1.0 - self.rho11, 0.0)],
        ]
    }

    /// Adds an increment without re-validating.
    pub fn shifted(&self, delta: &StateDelta) -> Self {
        Self::from_raw(self.rho11 + delta.d11, self.rho12 + delta.d12)
    }

    /// Increment leading from `self` to `other`.
    pub fn delta_to(&self, other: &DensityMatrix) -> StateDelta {
        StateDelta {
            d11: other.rho11 - self.rho11,
            d12: other.rho12 - self.rho12,
        }
    }

    /// `ρ ↦ U ρ U†` with `U = exp(−i h dt / ħ)`, applied as an exact
    /// rotation of the Bloch vector about the axis of `h`.
    pub fn propagate(&self, h: &QubitOperator, dt: f64, hbar: f64) -> Self {
        let norm = h.vector_norm();
        if norm == 0.0 {
            return *self;
        }
        let n = [h.cx / norm, h.cy / norm, h.cz / norm];
        let (s, c) = (2.0 * norm * dt / hbar).sin_cos();
        // standard orientation: ρ12 = (x − i y) / 2
        let r = [
            2.0 * self.rho12.re,
            -2.0 * self.rho12.im,
            2.0 * self.rho11 - 1.0,
        ];
        let cross = [
            n[1] * r[2] - n[2] * r[1],
            n[2] * r[0] - n[0] * r[2],
            n[0] * r[1] - n[1] * r[0],
        ];
        let dot = n[0] * r[0] + n[1] * r[1] + n[2] * r[2];
        let omc = 1.0 - c;
        let rot = |i: usize| r[i] * c + cross[i] * s + n[i] * dot * omc;
        Self::from_raw(
            0.5 * (1.0 + rot(2)),
            Complex64::new(0.5 * rot(0), -0.5 * rot(1)),
        )
    }
}

/// Traceless Hermitian increment of a density matrix (`Δρ22 = −Δρ11`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateDelta {
    pub d11: f64,
    pub d12: Complex64,
}

impl StateDelta {
    pub const ZERO: StateDelta = StateDelta {
        d11: 0.0,
        d12: Complex64::new(0.0, 0.0),
    };

    pub fn new(d11: f64, d12: Complex64) -> Self {
        Self { d11, d12 }
    }

    pub fn max_abs(&self) -> f64 {
        self.d11.abs().max(self.d12.re.abs()).max(self.d12.im.abs())
    }
}

impl Add for StateDelta {
    type Output = StateDelta;
    fn add(self, rhs: StateDelta) -> StateDelta {
        StateDelta::new(self.d11 + rhs.d11, self.d12 + rhs.d12)
    }
}

impl AddAssign for StateDelta {
    fn add_assign(&mut self, rhs: StateDelta) {
        self.d11 += rhs.d11;
        self.d12 += rhs.d12;
    }
}

impl Sub for StateDelta {
    type Output = StateDelta;
    fn sub(self, rhs: StateDelta) -> StateDelta {
        StateDelta::new(self.d11 - rhs.d11, self.d12 - rhs.d12)
    }
}

impl Neg for StateDelta {
    type Output = StateDelta;
    fn neg(self) -> StateDelta {
        StateDelta::new(-self.d11, -self.d12)
    }
}

impl Mul<f64> for StateDelta {
    type Output = StateDelta;
    fn mul(self, s: f64) -> StateDelta {
        StateDelta::new(self.d11 * s, self.d12 * s)
    }
}

/// Hermitian 2×2 operator `c0·I + cx·σ_x + cy·σ_y + cz·σ_z`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QubitOperator {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
}

impl QubitOperator {
    pub const fn new(c0: f64, cx: f64, cy: f64, cz: f64) -> Self {
        Self { c0, cx, cy, cz }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub const fn sigma_x() -> Self {
        Self::new(0.0, 1.0, 0.0, 0.0)
    }

    pub const fn sigma_y() -> Self {
        Self::new(0.0, 0.0, 1.0, 0.0)
    }

    pub const fn sigma_z() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0)
    }

    /// `ε σ_z + λ σ_x`
    pub const fn driven_qubit(epsilon: f64, lambda: f64) -> Self {
        Self::new(0.0, lambda, 0.0, epsilon)
    }

    /// Length of the traceless part, `sqrt(cx² + cy² + cz²)`.
    pub fn vector_norm(&self) -> f64 {
        (self.cx * self.cx + self.cy * self.cy + self.cz * self.cz).sqrt()
    }

    pub fn matrix(&self) -> Mat2 {
        [
            [
                Complex64::new(self.c0 + self.cz, 0.0),
                Complex64::new(self.cx, -self.cy),
            ],
            [
                Complex64::new(self.cx, self.cy),
                Complex64::new(self.c0 - self.cz, 0.0),
            ],
        ]
    }

    pub fn is_traceless(&self) -> bool {
        self.c0 == 0.0
    }
}

impl Add for QubitOperator {
    type Output = QubitOperator;
    fn add(self, o: QubitOperator) -> QubitOperator {
        QubitOperator::new(self.c0 + o.c0, self.cx + o.cx, self.cy + o.cy, self.cz + o.cz)
    }
}

impl Sub for QubitOperator {
    type Output = QubitOperator;
    fn sub(self, o: QubitOperator) -> QubitOperator {
        QubitOperator::new(self.c0 - o.c0, self.cx - o.cx, self.cy - o.cy, self.cz - o.cz)
    }
}

impl Mul<f64> for QubitOperator {
    type Output = QubitOperator;
    fn mul(self, s: f64) -> QubitOperator {
        QubitOperator::new(self.c0 * s, self.cx * s, self.cy * s, self.cz * s)
    }
}

/// `tr{ρ A}`
pub fn expectation(rho: &DensityMatrix, a: &QubitOperator) -> f64 {
    // ρ11 A11 + ρ22 A22 + 2 Re(ρ12 A21)
    let a21 = Complex64::new(a.cx, a.cy);
    rho.rho11 * (a.c0 + a.cz) + (1.0 - rho.rho11) * (a.c0 - a.cz) + 2.0 * (rho.rho12 * a21).re
}

/// `tr{A Δρ}` for a traceless increment.
pub fn trace_with(delta: &StateDelta, a: &QubitOperator) -> f64 {
    let a21 = Complex64::new(a.cx, a.cy);
    2.0 * a.cz * delta.d11 + 2.0 * (delta.d12 * a21).re
}

pub fn bloch_coordinates(rho: &DensityMatrix) -> (f64, f64, f64) {
    let [x, y, z] = rho.bloch();
    (x, y, z)
}

/// Sech-shaped drive `λ_t = g / cosh(ν (1 − t/τ))` on a qubit with static
/// splitting `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveProtocol {
    pub g: f64,
    pub nu: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub hbar: f64,
}

impl DriveProtocol {
    pub fn new(g: f64, nu: f64, tau: f64, epsilon: f64) -> Result<Self> {
        let p = Self {
            g,
            nu,
            tau,
            epsilon,
            hbar: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau", "must be positive and finite");
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return bad("g", "must be nonnegative and finite");
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad("nu", "must be nonnegative and finite");
        }
        if !self.epsilon.is_finite() {
            return bad("epsilon", "must be finite");
        }
        if !(self.hbar > 0.0) {
            return bad("hbar", "must be positive");
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.tau;
        if !(t >= -slack && t <= self.tau + slack) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                domain: format!("[0, {}]", self.tau),
            });
        }
        Ok(())
    }

    /// Envelope `1 / cosh(ν (1 − t/τ))`, unchecked.
    pub fn envelope(&self, t: f64) -> f64 {
        1.0 / (self.nu * (1.0 - t / self.tau)).cosh()
    }

    /// Hamiltonian at `t` with the peak amplitude replaced by `gain`.
    pub fn hamiltonian_with_gain(&self, t: f64, gain: f64) -> QubitOperator {
        QubitOperator::driven_qubit(self.epsilon, gain * self.envelope(t))
    }

    pub fn initial_hamiltonian(&self) -> QubitOperator {
        self.hamiltonian_with_gain(0.0, self.g)
    }

    pub fn final_hamiltonian(&self) -> QubitOperator {
        self.hamiltonian_with_gain(self.tau, self.g)
    }
}

pub fn drive_amplitude(t: f64, p: &DriveProtocol) -> Result<f64> {
    p.check_time(t)?;
    Ok(p.g * p.envelope(t))
}

pub fn hamiltonian_at(t: f64, p: &DriveProtocol) -> Result<QubitOperator> {
    Ok(QubitOperator::driven_qubit(p.epsilon, drive_amplitude(t, p)?))
}

/// Eigen-decomposition of a qubit operator. Index 0 is the lower level
/// (`e_minus`), index 1 the upper level (`e_plus`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub e_minus: f64,
    pub e_plus: f64,
    pub proj_minus: QubitOperator,
    pub proj_plus: QubitOperator,
    /// Set when all Pauli coefficients vanish; projectors are then the
    /// computational basis with `|1⟩` as the upper level.
    pub degenerate: bool,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> [f64; 2] {
        [self.e_minus, self.e_plus]
    }

    pub fn projectors(&self) -> [QubitOperator; 2] {
        [self.proj_minus, self.proj_plus]
    }

    pub fn eigenstate(&self, index: usize) -> DensityMatrix {
        let p = self.projectors()[index];
        DensityMatrix::from_raw(0.5 + p.cz, Complex64::new(p.cx, -p.cy))
    }

    /// `tr{Π_m ρ}` for both levels.
    pub fn populations(&self, rho: &DensityMatrix) -> [f64; 2] {
        [
            expectation(rho, &self.proj_minus),
            expectation(rho, &self.proj_plus),
        ]
    }
}

pub fn eigendecompose(h: &QubitOperator) -> SpectralDecomposition {
    let norm = h.vector_norm();
    let (ux, uy, uz, degenerate) = if norm == 0.0 {
        (0.0, 0.0, 1.0, true)
    } else {
        (h.cx / norm, h.cy / norm, h.cz / norm, false)
    };
    SpectralDecomposition {
        e_minus: h.c0 - norm,
        e_plus: h.c0 + norm,
        proj_minus: QubitOperator::new(0.5, -0.5 * ux, -0.5 * uy, -0.5 * uz),
        proj_plus: QubitOperator::new(0.5, 0.5 * ux, 0.5 * uy, 0.5 * uz),
        degenerate,
    }
}

/// Inverse temperature; `f64::INFINITY` selects the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub beta: f64,
}

impl ThermalSpec {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("{beta} must be nonnegative"),
            });
        }
        Ok(Self { beta })
    }
}

/// Gibbs weights `[p_minus, p_plus]` of a spectrum.
pub fn thermal_populations(spec: &ThermalSpec, spectrum: &SpectralDecomposition) -> [f64; 2] {
    let gap = spectrum.e_plus - spectrum.e_minus;
    if gap == 0.0 || spec.beta == 0.0 {
        return [0.5, 0.5];
    }
    // p_plus = 1 / (1 + e^{β gap}), stable for β → ∞.
    let p_plus = 1.0 / (1.0 + (spec.beta * gap).exp());
    [1.0 - p_plus, p_plus]
}

pub fn thermal_state(spec: &ThermalSpec, h: &QubitOperator) -> DensityMatrix {
    let spectrum = eigendecompose(h);
    let [p_minus, p_plus] = thermal_populations(spec, &spectrum);
    let op = spectrum.proj_minus * p_minus + spectrum.proj_plus * p_plus;
    DensityMatrix::from_raw(0.5 + op.cz, Complex64::new(op.cx, -op.cy))
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln Z = ln tr e^{−βH}`
pub fn log_partition_function(beta: f64, h: &QubitOperator) -> f64 {
    -beta * h.c0 + std::f64::consts::LN_2 + ln_cosh(beta * h.vector_norm())
}

/// `ΔF = −(1/β) ln(Z_τ / Z_0)`
pub fn free_energy_difference(
    spec: &ThermalSpec,
    h0: &QubitOperator,
    htau: &QubitOperator,
) -> Result<f64> {
    if !(spec.beta > 0.0 && spec.beta.is_finite()) {
        return Err(Error::Domain {
            what: "beta",
            value: spec.beta,
            domain: "(0, ∞)".into(),
        });
    }
    let beta = spec.beta;
    Ok(-(log_partition_function(beta, htau) - log_partition_function(beta, h0)) / beta)
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let r = rho.bloch_norm_sqr().sqrt().min(1.0);
    [0.5 * (1.0 + r), 0.5 * (1.0 - r)]
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}
