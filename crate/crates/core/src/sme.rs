//! Single-trajectory integration of the Bayesian stochastic master equation
//! of a qubit monitored in the `σ_z` basis.
//!
//! In Ito form the measurement terms are
//!
//! ```text
//! dρ11 = ρ11 ρ22 (2ΔI/S_0) ξ dt
//! dρ12 = [−ρ12 ΔI²/(4S_0) + (1 − 2ρ11) ρ12 (ΔI/S_0) ξ] dt
//! ```
//!
//! with `⟨ξ(t) ξ(t')⟩ = (S_0/2) δ(t − t')`, and the unitary part is
//! `−(i/ħ)[H, ρ]`.
//!
//! Every step is a symmetric splitting: half a step of exact unitary
//! propagation under the mid-step Hamiltonian, a measurement update, and
//! another unitary half step. The two unitary pieces form `d_rho_w`; the
//! measurement update plus any physicality projection form `d_rho_q`. Since
//! `d_rho_w` is generated by the step Hamiltonian `h`, `tr{h d_rho_w} = 0`
//! holds to rounding, which is what makes the per-step first law exact.

use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{sigma_step, NoiseSource};
use crate::qubit::{DensityMatrix, DriveProtocol, QubitOperator, StateDelta};
use crate::thermo::{StepThermo, ThermoLedger};

/// Bloch-norm² excess above which a step aborts.
pub const MAX_BLOCH_EXCESS: f64 = 1e-3;

/// Bloch-norm² excess below which a projection is treated as rounding and
/// not counted as a clamp event.
pub const CLAMP_EVENT_FLOOR: f64 = 1e-12;

/// Phenomenological linear detector with symmetric noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Signal contrast `ΔI`.
    pub delta_i: f64,
    /// Noise spectral density `S_0`.
    pub s0: f64,
    /// Baseline current `I_0`.
    pub i0: f64,
}

impl DetectorModel {
    pub fn new(delta_i: f64, s0: f64, i0: f64) -> Result<Self> {
        let det = Self { delta_i, s0, i0 };
        det.validate()?;
        Ok(det)
    }

    /// A detector that does not couple to the qubit.
    pub fn disconnected() -> Self {
        Self {
            delta_i: 0.0,
            s0: 0.0,
            i0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_i.is_finite() || !self.s0.is_finite() || !self.i0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "detector",
                reason: "parameters must be finite".into(),
            });
        }
        if self.s0 < 0.0 || (self.delta_i != 0.0 && self.s0 == 0.0) {
            return Err(Error::InvalidParameter {
                name: "s0",
                reason: format!("S_0 = {} must be positive when ΔI ≠ 0", self.s0),
            });
        }
        Ok(())
    }

    pub fn is_coupled(&self) -> bool {
        self.delta_i != 0.0
    }

    /// `τ_M = 2 S_0 / ΔI²`
    pub fn measurement_time(&self) -> f64 {
        2.0 * self.s0 / (self.delta_i * self.delta_i)
    }

    /// Ensemble dephasing rate `Γ = ΔI² / (4 S_0)`.
    pub fn dephasing_rate(&self) -> f64 {
        if self.is_coupled() {
            self.delta_i * self.delta_i / (4.0 * self.s0)
        } else {
            0.0
        }
    }

    /// White-noise intensity `σ² = S_0 / 2`.
    pub fn noise_intensity(&self) -> f64 {
        0.5 * self.s0
    }

    fn gain(&self) -> f64 {
        if self.is_coupled() {
            self.delta_i / self.s0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Euler–Maruyama on the Ito measurement terms.
    ItoEuler,
    /// Heun predictor–corrector on the Stratonovich-converted measurement
    /// terms, `ξ` held fixed across both stages.
    StratonovichHeun,
    /// Exact flow of the Stratonovich measurement terms for a detector
    /// record held constant over the step (the Bayesian update).
    #[default]
    Bayesian,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ItoEuler => "ito-euler",
            Scheme::StratonovichHeun => "stratonovich-heun",
            Scheme::Bayesian => "bayesian",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ito" | "ito-euler" => Ok(Scheme::ItoEuler),
            "stratonovich" | "stratonovich-heun" => Ok(Scheme::StratonovichHeun),
            "bayesian" => Ok(Scheme::Bayesian),
            other => Err(Error::InvalidParameter {
                name: "scheme",
                reason: format!("unknown scheme `{other}`"),
            }),
        }
    }
}

/// Additive split of one step, `Δρ = d_rho_w + d_rho_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDecomposition {
    pub d_rho_w: StateDelta,
    pub d_rho_q: StateDelta,
    pub xi: f64,
}

impl StepDecomposition {
    pub fn total(&self) -> StateDelta {
        self.d_rho_w + self.d_rho_q
    }
}

/// First-order unitary generator `−(i/ħ)[h, ρ] dt`.
pub fn unitary_increment(rho: &DensityMatrix, h: &QubitOperator, dt: f64, hbar: f64) -> StateDelta {
    let hm = h.matrix();
    let rm = rho.matrix();
    let comm = |i: usize, j: usize| {
        (hm[i][0] * rm[0][j] + hm[i][1] * rm[1][j]) - (rm[i][0] * hm[0][j] + rm[i][1] * hm[1][j])
    };
    let scale = Complex64::new(0.0, -dt / hbar);
    StateDelta::new((scale * comm(0, 0)).re, scale * comm(0, 1))
}

/// Exact unitary increment `U ρ U† − ρ` for a constant `h` over `dt`.
pub fn unitary_rotation_increment(
    rho: &DensityMatrix,
    h: &QubitOperator,
    dt: f64,
    hbar: f64,
) -> StateDelta {
    rho.delta_to(&rho.propagate(h, dt, hbar))
}

/// Ito measurement increment for a given noise value.
pub fn measurement_increment(rho: &DensityMatrix, xi: f64, dt: f64, det: &DetectorModel) -> StateDelta {
    let k = det.gain();
    let r11 = rho.rho11();
    let r12 = rho.rho12();
    let d11 = r11 * (1.0 - r11) * 2.0 * k * xi * dt;
    let d12 = (-r12 * det.dephasing_rate() + (1.0 - 2.0 * r11) * r12 * (k * xi)) * dt;
    StateDelta::new(d11, d12)
}

/// Real coordinates `(ρ11, Re ρ12, Im ρ12)`.
pub type Coords = [f64; 3];

pub fn coords(rho: &DensityMatrix) -> Coords {
    [rho.rho11(), rho.rho12().re, rho.rho12().im]
}

/// Noise coefficient vector `b` (the factor multiplying `ξ dt`).
pub fn noise_coefficients(x: &Coords, det: &DetectorModel) -> Coords {
    let k = det.gain();
    let m = 1.0 - 2.0 * x[0];
    [x[0] * (1.0 - x[0]) * 2.0 * k, m * x[1] * k, m * x[2] * k]
}

/// `J[i][j] = ∂b_i / ∂x_j`
pub fn noise_jacobian(x: &Coords, det: &DetectorModel) -> [[f64; 3]; 3] {
    let k = det.gain();
    let m = 1.0 - 2.0 * x[0];
    [
        [2.0 * k * m, 0.0, 0.0],
        [-2.0 * k * x[1], k * m, 0.0],
        [-2.0 * k * x[2], 0.0, k * m],
    ]
}

/// Ito drift of the measurement terms.
pub fn ito_drift(x: &Coords, det: &DetectorModel) -> Coords {
    let gamma = det.dephasing_rate();
    [0.0, -gamma * x[1], -gamma * x[2]]
}

/// Stratonovich drift `a_i − (σ²/2) Σ_j b_j ∂b_i/∂x_j` of the measurement
/// terms, with `σ² = S_0/2`.
pub fn stratonovich_drift(x: &Coords, det: &DetectorModel) -> Coords {
    let a = ito_drift(x, det);
    let b = noise_coefficients(x, det);
    let jac = noise_jacobian(x, det);
    let half_sigma2 = 0.5 * det.noise_intensity();
    let mut out = a;
    for (i, row) in jac.iter().enumerate() {
        let jb: f64 = row.iter().zip(&b).map(|(j, bj)| j * bj).sum();
        out[i] -= half_sigma2 * jb;
    }
    out
}

/// Measured signal `I − I_0` for a state and noise value.
pub fn detector_signal(rho: &DensityMatrix, xi: f64, det: &DetectorModel) -> f64 {
    0.5 * det.delta_i * (2.0 * rho.rho11() - 1.0) + xi
}

/// `I = I_0 + (ΔI/2)(2ρ11 − 1) + ξ`
pub fn detector_current(rho: &DensityMatrix, xi: f64, det: &DetectorModel) -> f64 {
    det.i0 + detector_signal(rho, xi, det)
}

/// Bayesian update of the state for a detector signal `I − I_0` averaged
/// over `dt`: the log-likelihood ratio `(2ΔI/S_0)(I − I_0) dt` shifts the
/// log-odds of the populations, and `ρ12 / sqrt(ρ11 ρ22)` is conserved.
pub fn bayesian_update(rho: &DensityMatrix, signal: f64, dt: f64, det: &DetectorModel) -> DensityMatrix {
    let u = det.gain() * signal * dt;
    if u == 0.0 {
        return *rho;
    }
    let up = rho.rho11() * u.exp();
    let down = rho.rho22() * (-u).exp();
    let z = up + down;
    DensityMatrix::from_raw(up / z, rho.rho12() / z)
}

fn add(x: &Coords, y: &Coords) -> Coords {
    [x[0] + y[0], x[1] + y[1], x[2] + y[2]]
}

fn heun_increment(rho: &DensityMatrix, xi: f64, dt: f64, det: &DetectorModel) -> StateDelta {
    let field = |x: &Coords| -> Coords {
        let a = stratonovich_drift(x, det);
        let b = noise_coefficients(x, det);
        [
            (a[0] + b[0] * xi) * dt,
            (a[1] + b[1] * xi) * dt,
            (a[2] + b[2] * xi) * dt,
        ]
    };
    let x = coords(rho);
    let f0 = field(&x);
    let f1 = field(&add(&x, &f0));
    StateDelta::new(
        0.5 * (f0[0] + f1[0]),
        Complex64::new(0.5 * (f0[1] + f1[1]), 0.5 * (f0[2] + f1[2])),
    )
}

/// Everything produced by one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: DensityMatrix,
    pub decomposition: StepDecomposition,
    /// Detector output sampled during the step.
    pub current: f64,
    /// Bloch-norm² excess before projection (negative when inside the ball).
    pub pre_clamp_excess: f64,
    pub clamped: bool,
}

/// Fixed settings of a step sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stepper {
    pub dt: f64,
    pub hbar: f64,
    pub scheme: Scheme,
    pub detector: DetectorModel,
}

impl Stepper {
    /// Advances `rho` by one step under the constant step Hamiltonian `h`
    /// with noise value `xi`. `index` only labels errors.
    pub fn step(&self, index: usize, rho: &DensityMatrix, h: &QubitOperator, xi: f64) -> Result<StepOutcome> {
        let half = 0.5 * self.dt;
        let det = &self.detector;

        let rho_a = rho.propagate(h, half, self.hbar);
        let current = detector_current(&rho_a, xi, det);
        let rho_b = if det.is_coupled() {
            match self.scheme {
                Scheme::ItoEuler => rho_a.shifted(&measurement_increment(&rho_a, xi, self.dt, det)),
                Scheme::StratonovichHeun => rho_a.shifted(&heun_increment(&rho_a, xi, self.dt, det)),
                Scheme::Bayesian => {
                    bayesian_update(&rho_a, detector_signal(&rho_a, xi, det), self.dt, det)
                }
            }
        } else {
            rho_a
        };
        let rho_c = rho_b.propagate(h, half, self.hbar);

        let excess = rho_c.bloch_norm_sqr() - 1.0;
        if !(excess <= MAX_BLOCH_EXCESS) {
            return Err(Error::IntegrationBlowup { step: index, excess });
        }
        let rho_d = if excess > 0.0 { project_to_ball(&rho_c) } else { rho_c };

        let d_rho_w = rho.delta_to(&rho_a) + rho_b.delta_to(&rho_c);
        let d_rho_q = rho_a.delta_to(&rho_b) + rho_c.delta_to(&rho_d);
        let decomposition = StepDecomposition { d_rho_w, d_rho_q, xi };
        Ok(StepOutcome {
            state: rho.shifted(&decomposition.total()),
            decomposition,
            current,
            pre_clamp_excess: excess,
            clamped: excess > CLAMP_EVENT_FLOOR,
        })
    }
}

fn project_to_ball(rho: &DensityMatrix) -> DensityMatrix {
    let [_, _, z] = rho.bloch();
    let inv = 1.0 / rho.bloch_norm_sqr().sqrt();
    DensityMatrix::from_raw(0.5 * (1.0 + z * inv), rho.rho12() * inv)
}

/// One step from time `t` under the nominal protocol; the step Hamiltonian
/// is evaluated at `t + dt/2`.
pub fn step(
    rho: &DensityMatrix,
    t: f64,
    dt: f64,
    protocol: &DriveProtocol,
    det: &DetectorModel,
    xi: f64,
    scheme: Scheme,
) -> Result<StepOutcome> {
    let h = protocol.hamiltonian_with_gain(t + 0.5 * dt, protocol.g);
    Stepper {
        dt,
        hbar: protocol.hbar,
        scheme,
        detector: *det,
    }
    .step(0, rho, &h, xi)
}

/// Drive-gain controller consulted at the start of every step.
pub trait Controller {
    /// Gain to use for step `k` given the state at the step start.
    fn gain(&mut self, k: usize, rho: &DensityMatrix, nominal: f64) -> f64;
}

/// Full time series of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub dt: f64,
    /// `steps + 1` grid times.
    pub times: Vec<f64>,
    /// `steps + 1` states.
    pub states: Vec<DensityMatrix>,
    /// Detector currents, one per step.
    pub currents: Vec<f64>,
    /// Drive gains actually applied, one per step.
    pub gains: Vec<f64>,
    pub decompositions: Vec<StepDecomposition>,
    /// Work, heat and energy increments, one per step.
    pub thermo: Vec<StepThermo>,
    /// Quench from the last step Hamiltonian to the nominal `H_τ`.
    pub closing: StepThermo,
    pub ledger: ThermoLedger,
    pub clamp_events: usize,
    /// Largest Bloch-norm² excess seen before projection.
    pub max_pre_clamp_excess: f64,
}

impl TrajectoryRecord {
    pub fn steps(&self) -> usize {
        self.decompositions.len()
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.states[0]
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("record holds the initial state")
    }

    /// `(Σ d_rho_w, Σ d_rho_q)` over the whole trajectory.
    pub fn integrated_increments(&self) -> (StateDelta, StateDelta) {
        self.decompositions
            .iter()
            .fold((StateDelta::ZERO, StateDelta::ZERO), |(w, q), d| (w + d.d_rho_w, q + d.d_rho_q))
    }
}

/// Integrates one trajectory of `steps` steps over `[0, τ]`.
pub fn integrate_trajectory(
    init: &DensityMatrix,
    protocol: &DriveProtocol,
    det: &DetectorModel,
    noise: &dyn NoiseSource,
    scheme: Scheme,
    steps: usize,
    mut controller: Option<&mut dyn Controller>,
) -> Result<TrajectoryRecord> {
    protocol.validate()?;
    det.validate()?;
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            reason: "at least one step is required".into(),
        });
    }
    let dt = protocol.tau / steps as f64;
    let stepper = Stepper {
        dt,
        hbar: protocol.hbar,
        scheme,
        detector: *det,
    };
    let sigma = if det.is_coupled() { sigma_step(det.s0, dt) } else { 0.0 };

    let mut rho = *init;
    let mut h_prev = protocol.initial_hamiltonian();
    let mut ledger = ThermoLedger::new(&rho, &h_prev);

    let mut rec = TrajectoryRecord {
        dt,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        currents: Vec::with_capacity(steps),
        gains: Vec::with_capacity(steps),
        decompositions: Vec::with_capacity(steps),
        thermo: Vec::with_capacity(steps),
        closing: StepThermo::default(),
        ledger: ledger.clone(),
        clamp_events: 0,
        max_pre_clamp_excess: f64::NEG_INFINITY,
    };
    rec.times.push(0.0);
    rec.states.push(rho);

    for k in 0..steps {
        let gain = match controller.as_deref_mut() {
            Some(c) => c.gain(k, &rho, protocol.g),
            None => protocol.g,
        };
        let t_mid = (k as f64 + 0.5) * dt;
        let h = protocol.hamiltonian_with_gain(t_mid, gain);
        let xi = if sigma == 0.0 { 0.0 } else { sigma * noise.standard_normal(k) };
        let out = stepper.step(k, &rho, &h, xi).map_err(|e| Error::Trajectory {
            trajectory: 0,
            clamp_events: rec.clamp_events,
            source: Box::new(e),
        })?;
        let thermo = ledger.update(k, &rho, &out.state, &h_prev, &h, &out.decomposition)?;

        rec.clamp_events += usize::from(out.clamped);
        rec.max_pre_clamp_excess = rec.max_pre_clamp_excess.max(out.pre_clamp_excess);
        rec.times.push((k + 1) as f64 * dt);
        rec.states.push(out.state);
        rec.currents.push(out.current);
        rec.gains.push(gain);
        rec.decompositions.push(out.decomposition);
        rec.thermo.push(thermo);

        rho = out.state;
        h_prev = h;
    }
    rec.closing = ledger.close(steps, &rho, &h_prev, &protocol.final_hamiltonian())?;
    rec.ledger = ledger;
    Ok(rec)
}
