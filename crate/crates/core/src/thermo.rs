//! Work and heat along single trajectories, transition-probability
//! decompositions, two-point-measurement statistics and Jarzynski estimates.
//!
//! Per step, with `h_prev` the Hamiltonian of the previous step and `h` the
//! current one:
//!
//! ```text
//! δW = tr{ρ_prev (h − h_prev)}      δQ = tr{h d_rho_q}
//! dU = tr{h ρ_now} − tr{h_prev ρ_prev} = δW + δQ
//! ```
//!
//! Transition indices follow [`SpectralDecomposition`]: 0 is the lower
//! level, 1 the upper one. Matrices are indexed `[m][n]`, final level `m`,
//! initial level `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{expectation, trace_with, DensityMatrix, QubitOperator, SpectralDecomposition, StateDelta};
use crate::sme::{StepDecomposition, TrajectoryRecord};

/// A single step's first-law residual above this aborts the run.
pub const STEP_RESIDUAL_LIMIT: f64 = 1e-10;

/// Coincident energy differences closer than this merge into one atom.
pub const ATOM_MERGE_TOLERANCE: f64 = 1e-9;

/// Tolerance for column sums and the decomposition identity.
pub const TRANSITION_TOLERANCE: f64 = 1e-10;

pub fn step_work(rho_prev: &DensityMatrix, h_prev: &QubitOperator, h_now: &QubitOperator) -> f64 {
    expectation(rho_prev, &(*h_now - *h_prev))
}

pub fn step_heat(d_rho_q: &StateDelta, h_now: &QubitOperator) -> f64 {
    trace_with(d_rho_q, h_now)
}

/// Thermodynamic increments of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepThermo {
    pub dw: f64,
    pub dq: f64,
    pub du: f64,
    /// `|dU − δW − δQ|`
    pub residual: f64,
}

/// Cumulative work, heat and internal energy of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoLedger {
    pub w_cum: f64,
    pub q_cum: f64,
    pub u0: f64,
    pub u_now: f64,
    pub max_residual: f64,
}

impl ThermoLedger {
    pub fn new(rho0: &DensityMatrix, h0: &QubitOperator) -> Self {
        let u0 = expectation(rho0, h0);
        Self {
            w_cum: 0.0,
            q_cum: 0.0,
            u0,
            u_now: u0,
            max_residual: 0.0,
        }
    }

    /// Books one integration step.
    pub fn update(
        &mut self,
        step: usize,
        rho_prev: &DensityMatrix,
        rho_now: &DensityMatrix,
        h_prev: &QubitOperator,
        h_now: &QubitOperator,
        decomposition: &StepDecomposition,
    ) -> Result<StepThermo> {
        let dw = step_work(rho_prev, h_prev, h_now);
        let dq = step_heat(&decomposition.d_rho_q, h_now);
        self.book(step, rho_now, h_now, dw, dq)
    }

    /// Books a sudden change `h_prev → h_final` with the state held fixed.
    pub fn close(
        &mut self,
        step: usize,
        rho: &DensityMatrix,
        h_prev: &QubitOperator,
        h_final: &QubitOperator,
    ) -> Result<StepThermo> {
        let dw = step_work(rho, h_prev, h_final);
        self.book(step, rho, h_final, dw, 0.0)
    }

    fn book(&mut self, step: usize, rho_now: &DensityMatrix, h_now: &QubitOperator, dw: f64, dq: f64) -> Result<StepThermo> {
        let u = expectation(rho_now, h_now);
        let du = u - self.u_now;
        let residual = (du - dw - dq).abs();
        if !(residual <= STEP_RESIDUAL_LIMIT) {
            return Err(Error::FirstLawViolation {
                step,
                residual,
                tolerance: STEP_RESIDUAL_LIMIT,
            });
        }
        self.w_cum += dw;
        self.q_cum += dq;
        self.u_now = u;
        self.max_residual = self.max_residual.max(residual);
        Ok(StepThermo { dw, dq, du, residual })
    }

    pub fn delta_u(&self) -> f64 {
        self.u_now - self.u0
    }

    /// `(U − U_0) − (W + Q)` accumulated over the run.
    pub fn first_law_gap(&self) -> f64 {
        self.delta_u() - (self.w_cum + self.q_cum)
    }
}

/// Transition data of one trajectory started in level `n`, indexed by the
/// final level `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionColumn {
    pub n: usize,
    pub p_tau: [f64; 2],
    pub dp_w: [f64; 2],
    pub dp_q: [f64; 2],
}

impl TransitionColumn {
    /// `|P^τ_m − δ_mn − δP^W_m − δP^Q_m|`, maximized over `m`.
    pub fn identity_gap(&self) -> f64 {
        (0..2)
            .map(|m| {
                let p0 = if m == self.n { 1.0 } else { 0.0 };
                (self.p_tau[m] - p0 - self.dp_w[m] - self.dp_q[m]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the transition column of one trajectory.
///
/// `δP^Q_m = tr{Π_m Σ d_rho_q}` and `δP^W_m = tr{Π_m Σ d_rho_w}` with `Π_m`
/// the final-Hamiltonian projectors. The work part also carries
/// `tr{Π_m ρ_0} − δ_mn`, the change of measurement basis between `H_0` and
/// `H_τ` at fixed state.
pub fn trajectory_column(
    n: usize,
    rho0: &DensityMatrix,
    rho_tau: &DensityMatrix,
    sum_dw: &StateDelta,
    sum_dq: &StateDelta,
    basis_0: &SpectralDecomposition,
    basis_tau: &SpectralDecomposition,
) -> Result<TransitionColumn> {
    if n > 1 {
        return Err(Error::Precondition(format!("level index {n} out of range")));
    }
    let expected = basis_0.eigenstate(n);
    let mismatch = rho0.delta_to(&expected).max_abs();
    if mismatch > 1e-12 {
        return Err(Error::Precondition(format!(
            "trajectory does not start in eigenstate {n} of H_0 (deviation {mismatch:e})"
        )));
    }
    let projectors = basis_tau.projectors();
    let mut col = TransitionColumn {
        n,
        p_tau: [0.0; 2],
        dp_w: [0.0; 2],
        dp_q: [0.0; 2],
    };
    for (m, proj) in projectors.iter().enumerate() {
        let p0 = if m == n { 1.0 } else { 0.0 };
        col.p_tau[m] = expectation(rho_tau, proj);
        col.dp_q[m] = trace_with(sum_dq, proj);
        col.dp_w[m] = trace_with(sum_dw, proj) + (expectation(rho0, proj) - p0);
    }
    Ok(col)
}

pub fn record_column(
    n: usize,
    record: &TrajectoryRecord,
    basis_0: &SpectralDecomposition,
    basis_tau: &SpectralDecomposition,
) -> Result<TransitionColumn> {
    let (w, q) = record.integrated_increments();
    trajectory_column(n, record.initial_state(), record.final_state(), &w, &q, basis_0, basis_tau)
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanError {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanError {
    /// Two-pass estimate, summing in slice order.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }
}

/// Trajectory-averaged column with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub n: usize,
    pub n_traj: usize,
    pub p_tau: [MeanError; 2],
    pub dp_w: [MeanError; 2],
    pub dp_q: [MeanError; 2],
}

impl ColumnStats {
    pub fn from_columns(n: usize, columns: &[TransitionColumn]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Precondition("no trajectories for transition column".into()));
        }
        if let Some(c) = columns.iter().find(|c| c.n != n) {
            return Err(Error::Precondition(format!(
                "column for level {} mixed into level {n}",
                c.n
            )));
        }
        let stat = |f: &dyn Fn(&TransitionColumn) -> f64| {
            MeanError::of(&columns.iter().map(f).collect::<Vec<_>>())
        };
        Ok(Self {
            n,
            n_traj: columns.len(),
            p_tau: [stat(&|c| c.p_tau[0]), stat(&|c| c.p_tau[1])],
            dp_w: [stat(&|c| c.dp_w[0]), stat(&|c| c.dp_w[1])],
            dp_q: [stat(&|c| c.dp_q[0]), stat(&|c| c.dp_q[1])],
        })
    }
}

/// Averaged transition column for initial level `n` from full records.
pub fn transition_decomposition(
    n: usize,
    records: &[TrajectoryRecord],
    basis_0: &SpectralDecomposition,
    basis_tau: &SpectralDecomposition,
) -> Result<ColumnStats> {
    let cols = records
        .iter()
        .map(|r| record_column(n, r, basis_0, basis_tau))
        .collect::<Result<Vec<_>>>()?;
    ColumnStats::from_columns(n, &cols)
}

type Matrix2 = [[f64; 2]; 2];

/// Averaged `P^τ_{m,n}`, `δP^W_{m,n}`, `δP^Q_{m,n}` over both initial levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDecomposition {
    pub p0: Matrix2,
    pub p_tau: Matrix2,
    pub dp_w: Matrix2,
    pub dp_q: Matrix2,
    pub p_tau_stderr: Matrix2,
    pub dp_w_stderr: Matrix2,
    pub dp_q_stderr: Matrix2,
    pub n_traj: [usize; 2],
}

impl TransitionDecomposition {
    pub fn from_columns(columns: [&ColumnStats; 2]) -> Result<Self> {
        let mut d = Self {
            p0: [[1.0, 0.0], [0.0, 1.0]],
            p_tau: [[0.0; 2]; 2],
            dp_w: [[0.0; 2]; 2],
            dp_q: [[0.0; 2]; 2],
            p_tau_stderr: [[0.0; 2]; 2],
            dp_w_stderr: [[0.0; 2]; 2],
            dp_q_stderr: [[0.0; 2]; 2],
            n_traj: [0; 2],
        };
        for (n, col) in columns.iter().enumerate() {
            if col.n != n {
                return Err(Error::Precondition(format!(
                    "column {n} holds level {}",
                    col.n
                )));
            }
            d.n_traj[n] = col.n_traj;
            for m in 0..2 {
                d.p_tau[m][n] = col.p_tau[m].mean;
                d.dp_w[m][n] = col.dp_w[m].mean;
                d.dp_q[m][n] = col.dp_q[m].mean;
                d.p_tau_stderr[m][n] = col.p_tau[m].stderr;
                d.dp_w_stderr[m][n] = col.dp_w[m].stderr;
                d.dp_q_stderr[m][n] = col.dp_q[m].stderr;
            }
        }
        Ok(d)
    }

    /// Transition matrix without statistical errors, e.g. from a
    /// deterministic propagation.
    pub fn exact(p_tau: Matrix2) -> Self {
        let mut d = Self {
            p0: [[1.0, 0.0], [0.0, 1.0]],
            p_tau,
            dp_w: [[0.0; 2]; 2],
            dp_q: [[0.0; 2]; 2],
            p_tau_stderr: [[0.0; 2]; 2],
            dp_w_stderr: [[0.0; 2]; 2],
            dp_q_stderr: [[0.0; 2]; 2],
            n_traj: [1, 1],
        };
        for m in 0..2 {
            for n in 0..2 {
                d.dp_w[m][n] = p_tau[m][n] - d.p0[m][n];
            }
        }
        d
    }

    /// Largest `|P^τ − P^0 − δP^W − δP^Q|` entry.
    pub fn identity_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for m in 0..2 {
            for n in 0..2 {
                gap = gap.max((self.p_tau[m][n] - self.p0[m][n] - self.dp_w[m][n] - self.dp_q[m][n]).abs());
            }
        }
        gap
    }

    /// Checks column sums, entry ranges and the additive identity.
    pub fn check_invariants(&self) -> Result<()> {
        let tol = TRANSITION_TOLERANCE;
        for n in 0..2 {
            let sums = [
                self.p_tau[0][n] + self.p_tau[1][n] - 1.0,
                self.dp_w[0][n] + self.dp_w[1][n],
                self.dp_q[0][n] + self.dp_q[1][n],
            ];
            for (name, s) in ["p_tau", "dp_w", "dp_q"].iter().zip(sums) {
                if s.abs() > tol {
                    return Err(Error::OutputInvariant(format!(
                        "column {n} of {name} sums off by {s:e}"
                    )));
                }
            }
            for m in 0..2 {
                let p = self.p_tau[m][n];
                if !(-tol..=1.0 + tol).contains(&p) {
                    return Err(Error::OutputInvariant(format!("p_tau[{m}][{n}] = {p} outside [0, 1]")));
                }
            }
        }
        let gap = self.identity_gap();
        if gap > tol {
            return Err(Error::OutputInvariant(format!(
                "p_tau − p0 differs from dp_w + dp_q by {gap:e}"
            )));
        }
        Ok(())
    }
}

/// Atoms of a discrete distribution of energy changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    pub support: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.probabilities).map(|(w, p)| w * p).sum()
    }
}

/// `p(u) = Σ_{m,n} P^τ_{m,n} P^0_n δ(u − (E^τ_m − E^0_n))`.
pub fn tpm_distribution(
    p0_populations: [f64; 2],
    p_tau: &Matrix2,
    basis_0: &SpectralDecomposition,
    basis_tau: &SpectralDecomposition,
) -> Result<DiscreteDistribution> {
    let tol = TRANSITION_TOLERANCE;
    if (p0_populations.iter().sum::<f64>() - 1.0).abs() > tol || p0_populations.iter().any(|&p| p < 0.0) {
        return Err(Error::Precondition(format!(
            "initial populations {p0_populations:?} are not a distribution"
        )));
    }
    for n in 0..2 {
        let s = p_tau[0][n] + p_tau[1][n];
        if (s - 1.0).abs() > tol || p_tau[0][n] < -tol || p_tau[1][n] < -tol {
            return Err(Error::Precondition(format!(
                "transition column {n} is not stochastic (sum {s})"
            )));
        }
    }
    let e0 = basis_0.eigenvalues();
    let et = basis_tau.eigenvalues();
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(4);
    for n in 0..2 {
        for m in 0..2 {
            atoms.push((et[m] - e0[n], p_tau[m][n] * p0_populations[n]));
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut dist = DiscreteDistribution {
        support: Vec::new(),
        probabilities: Vec::new(),
    };
    for (u, p) in atoms {
        match dist.support.last() {
            Some(&last) if (u - last).abs() <= ATOM_MERGE_TOLERANCE => {
                *dist.probabilities.last_mut().expect("paired with support") += p;
            }
            _ => {
                dist.support.push(u);
                dist.probabilities.push(p);
            }
        }
    }
    Ok(dist)
}

/// `−(1/β) ln Σ_i p_i e^{−β W_i}`
pub fn jarzynski_estimate(dist: &DiscreteDistribution, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain {
            what: "beta",
            value: beta,
            domain: "(0, ∞)".into(),
        });
    }
    // log-sum-exp over atoms with positive weight
    let terms: Vec<(f64, f64)> = dist
        .support
        .iter()
        .zip(&dist.probabilities)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&w, &p)| (p.ln(), -beta * w))
        .collect();
    let Some(shift) = terms.iter().map(|(lp, e)| lp + e).reduce(f64::max) else {
        return Err(Error::Numerical("Jarzynski sum has no positive weight".into()));
    };
    let sum: f64 = terms.iter().map(|(lp, e)| (lp + e - shift).exp()).sum();
    if !(sum > 0.0) {
        return Err(Error::Numerical(format!("nonpositive Jarzynski sum {sum}")));
    }
    Ok(-(shift + sum.ln()) / beta)
}

/// Free-energy estimate with a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JarzynskiEstimate {
    pub delta_f: f64,
    pub stderr: f64,
}

/// Jarzynski estimate from averaged transition probabilities, with the
/// error propagated from the per-entry standard errors. Within a column
/// the two entries are exactly anticorrelated (`P_0n + P_1n = 1` per
/// trajectory); columns come from independent trajectories.
pub fn jarzynski_from_transitions(
    decomposition: &TransitionDecomposition,
    p0_populations: [f64; 2],
    basis_0: &SpectralDecomposition,
    basis_tau: &SpectralDecomposition,
    beta: f64,
) -> Result<JarzynskiEstimate> {
    let dist = tpm_distribution(p0_populations, &decomposition.p_tau, basis_0, basis_tau)?;
    let delta_f = jarzynski_estimate(&dist, beta)?;
    let e0 = basis_0.eigenvalues();
    let et = basis_tau.eigenvalues();
    let boltz = |m: usize, n: usize| (-beta * (et[m] - e0[n])).exp();
    let mut sum = 0.0;
    let mut var = 0.0;
    for n in 0..2 {
        for m in 0..2 {
            sum += p0_populations[n] * decomposition.p_tau[m][n] * boltz(m, n);
        }
        let sens = p0_populations[n] * (boltz(1, n) - boltz(0, n));
        var += (sens * decomposition.p_tau_stderr[1][n]).powi(2);
    }
    Ok(JarzynskiEstimate {
        delta_f,
        stderr: var.sqrt() / (beta * sum),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{eigendecompose, thermal_populations, ThermalSpec};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn state(r11: f64, re: f64, im: f64) -> DensityMatrix {
        DensityMatrix::new(r11, Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn work_examples() {
        let h = QubitOperator::driven_qubit(0.1, 0.3);
        let rho = state(0.6, 0.3, 0.1);
        assert_eq!(step_work(&rho, &h, &h), 0.0);
        let h2 = QubitOperator::driven_qubit(0.1, 0.31);
        assert_eq!(step_work(&DensityMatrix::maximally_mixed(), &h, &h2), 0.0);
        assert_abs_diff_eq!(step_work(&rho, &h, &h2), 0.006, epsilon = 1e-15);
    }

    #[test]
    fn heat_examples() {
        let h = QubitOperator::driven_qubit(0.1, 0.625);
        assert_eq!(step_heat(&StateDelta::ZERO, &h), 0.0);
        let d = StateDelta::new(7e-4, Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!(step_heat(&d, &h), 1.4e-4, epsilon = 1e-18);
    }

    #[test]
    fn ledger_flags_inconsistent_steps() {
        let h = QubitOperator::driven_qubit(0.1, 0.3);
        let rho = state(0.6, 0.3, 0.1);
        let mut ledger = ThermoLedger::new(&rho, &h);
        let bogus = StepDecomposition {
            d_rho_w: StateDelta::ZERO,
            d_rho_q: StateDelta::ZERO,
            xi: 0.0,
        };
        let moved = state(0.7, 0.3, 0.1);
        let err = ledger.update(3, &rho, &moved, &h, &h, &bogus).unwrap_err();
        assert!(matches!(err, Error::FirstLawViolation { step: 3, .. }));
    }

    #[test]
    fn column_precondition() {
        let b0 = eigendecompose(&QubitOperator::driven_qubit(0.1, 0.0));
        let bt = eigendecompose(&QubitOperator::driven_qubit(0.1, 0.6));
        let wrong = DensityMatrix::maximally_mixed();
        let err = trajectory_column(0, &wrong, &wrong, &StateDelta::ZERO, &StateDelta::ZERO, &b0, &bt);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    fn preset_bases() -> (SpectralDecomposition, SpectralDecomposition) {
        let l0 = 0.625 / 8f64.cosh();
        (
            eigendecompose(&QubitOperator::driven_qubit(0.1, l0)),
            eigendecompose(&QubitOperator::driven_qubit(0.1, 0.625)),
        )
    }

    #[test]
    fn tpm_support_and_weights() {
        let (b0, bt) = preset_bases();
        let p0 = thermal_populations(&ThermalSpec::new(10.0).unwrap(), &b0);
        let p = [[0.7, 0.2], [0.3, 0.8]];
        let dist = tpm_distribution(p0, &p, &b0, &bt).unwrap();
        let expected = [-0.7329, -0.5329, 0.5329, 0.7329];
        assert_eq!(dist.support.len(), 4);
        for (u, e) in dist.support.iter().zip(expected) {
            assert_abs_diff_eq!(*u, e, epsilon = 1e-4);
        }
        assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tpm_identity_evolution() {
        let b = eigendecompose(&QubitOperator::driven_qubit(0.1, 0.2));
        let dist = tpm_distribution([0.3, 0.7], &[[1.0, 0.0], [0.0, 1.0]], &b, &b).unwrap();
        let nonzero: Vec<_> = dist
            .support
            .iter()
            .zip(&dist.probabilities)
            .filter(|(_, &p)| p > 0.0)
            .collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(*nonzero[0].0, 0.0);
        assert_abs_diff_eq!(*nonzero[0].1, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tpm_merges_degenerate_differences() {
        let b = eigendecompose(&QubitOperator::driven_qubit(0.0, 0.5));
        let dist = tpm_distribution([0.5, 0.5], &[[0.5, 0.5], [0.5, 0.5]], &b, &b).unwrap();
        assert_eq!(dist.support.len(), 3);
        assert_abs_diff_eq!(dist.probabilities[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn tpm_rejects_non_stochastic() {
        let b = eigendecompose(&QubitOperator::driven_qubit(0.1, 0.2));
        assert!(tpm_distribution([0.5, 0.5], &[[0.9, 0.0], [0.3, 1.0]], &b, &b).is_err());
    }

    #[test]
    fn jarzynski_brute_force_for_doubly_stochastic_transitions() {
        // Any unitary two-level transition matrix is doubly stochastic, for
        // which the four-term sum reduces to Z_τ / Z_0.
        let (b0, bt) = preset_bases();
        let spec = ThermalSpec::new(10.0).unwrap();
        let p0 = thermal_populations(&spec, &b0);
        let exact = crate::qubit::free_energy_difference(
            &spec,
            &QubitOperator::driven_qubit(0.1, 0.625 / 8f64.cosh()),
            &QubitOperator::driven_qubit(0.1, 0.625),
        )
        .unwrap();
        for q in [0.0, 0.13, 0.5, 0.87, 1.0] {
            let p = [[1.0 - q, q], [q, 1.0 - q]];
            let dist = tpm_distribution(p0, &p, &b0, &bt).unwrap();
            let est = jarzynski_estimate(&dist, 10.0).unwrap();
            let mut brute = 0.0;
            for n in 0..2 {
                for m in 0..2 {
                    brute += p[m][n] * p0[n] * (-10.0 * (bt.eigenvalues()[m] - b0.eigenvalues()[n])).exp();
                }
            }
            assert_abs_diff_eq!(est, -brute.ln() / 10.0, epsilon = 1e-12);
            assert_abs_diff_eq!(est, exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn mean_error_basics() {
        let me = MeanError::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(me.mean, 2.5);
        assert_abs_diff_eq!(me.stderr, (5.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
        assert_eq!(MeanError::of(&[3.0]).stderr, 0.0);
    }
}
