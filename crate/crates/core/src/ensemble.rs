//! Seeded Monte Carlo ensembles of monitored trajectories.
//!
//! Trajectory `i` draws its noise from stream `stream_offset + i` of the
//! configured seed, and all statistics are reduced sequentially in
//! trajectory order after a parallel map, so results do not depend on the
//! number of worker threads.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{reference_trajectory, FeedbackController, FeedbackParams, ReferenceTrajectory};
use crate::noise::{NoiseProcess, NoiseSource};
use crate::qubit::{eigendecompose, thermal_populations, DensityMatrix, DriveProtocol, SpectralDecomposition, ThermalSpec};
use crate::sme::{integrate_trajectory, Controller, DetectorModel, Scheme, TrajectoryRecord};
use crate::thermo::{record_column, ColumnStats, MeanError, TransitionColumn, TransitionDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Eigenstate `n` of `H_0` drawn with its Gibbs weight at inverse
    /// temperature `beta`.
    Thermal { beta: f64 },
    /// Eigenstate `n` of `H_0` (0 = lower level).
    Eigenstate(usize),
    Explicit(DensityMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub steps: usize,
    pub record_stride: usize,
    pub initial: InitialState,
    /// First noise stream; trajectory `i` uses stream `stream_offset + i`.
    pub stream_offset: u64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.n_traj == 0 {
            return bad("n_traj", "at least one trajectory is required");
        }
        if self.steps == 0 {
            return bad("steps", "at least one step is required");
        }
        if self.record_stride == 0 || !self.steps.is_multiple_of(self.record_stride) {
            return bad("record_stride", "must be positive and divide steps");
        }
        match self.initial {
            InitialState::Thermal { beta } => {
                ThermalSpec::new(beta)?;
            }
            InitialState::Eigenstate(n) if n > 1 => return bad("initial", "eigenstate index must be 0 or 1"),
            _ => {}
        }
        Ok(())
    }
}

/// Per-trajectory results kept after the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: usize,
    /// Initial level for eigenstate or thermal starts.
    pub initial_level: Option<usize>,
    /// Total work including the closing quench to the nominal `H_τ`.
    pub work: f64,
    pub heat: f64,
    pub delta_u: f64,
    pub clamp_events: usize,
    pub max_residual: f64,
    pub max_purity_drift: f64,
    pub final_state: DensityMatrix,
    pub column: Option<TransitionColumn>,
}

/// Ensemble statistics. State series hold `[ρ11, Re ρ12, Im ρ12]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    pub times: Vec<f64>,
    pub mean_state: Vec<[f64; 3]>,
    pub state_stderr: Vec<[f64; 3]>,
    /// Transition columns by initial level, present for eigenstate starts.
    pub columns: [Option<ColumnStats>; 2],
    pub work: MeanError,
    pub work_variance: f64,
    pub heat: MeanError,
    pub heat_variance: f64,
    pub clamp_events: usize,
    pub total_steps: usize,
    pub max_residual: f64,
    pub max_purity_drift: f64,
    pub trajectories: Vec<TrajectorySummary>,
}

impl EnsembleResult {
    pub fn clamp_fraction(&self) -> f64 {
        self.clamp_events as f64 / self.total_steps as f64
    }
}

fn components(rho: &DensityMatrix) -> [f64; 3] {
    [rho.rho11(), rho.rho12().re, rho.rho12().im]
}

struct Prepared {
    basis_0: SpectralDecomposition,
    basis_tau: SpectralDecomposition,
    p0: [f64; 2],
    /// Reference per possible initial state: levels 0 and 1, or the
    /// explicit state in slot 0.
    references: [Option<ReferenceTrajectory>; 2],
}

fn prepare(cfg: &EnsembleConfig, protocol: &DriveProtocol, fb: &FeedbackParams) -> Result<Prepared> {
    let basis_0 = eigendecompose(&protocol.initial_hamiltonian());
    let basis_tau = eigendecompose(&protocol.final_hamiltonian());
    let p0 = match cfg.initial {
        InitialState::Thermal { beta } => thermal_populations(&ThermalSpec::new(beta)?, &basis_0),
        InitialState::Eigenstate(0) => [1.0, 0.0],
        InitialState::Eigenstate(_) => [0.0, 1.0],
        InitialState::Explicit(_) => [f64::NAN; 2],
    };
    let mut references = [None, None];
    if fb.enabled {
        match cfg.initial {
            InitialState::Explicit(rho) => references[0] = Some(reference_trajectory(&rho, protocol, cfg.steps)?),
            _ => {
                for (n, slot) in references.iter_mut().enumerate() {
                    if p0[n] > 0.0 {
                        *slot = Some(reference_trajectory(&basis_0.eigenstate(n), protocol, cfg.steps)?);
                    }
                }
            }
        }
    }
    Ok(Prepared {
        basis_0,
        basis_tau,
        p0,
        references,
    })
}

fn simulate_prepared(
    i: usize,
    cfg: &EnsembleConfig,
    protocol: &DriveProtocol,
    det: &DetectorModel,
    fb: &FeedbackParams,
    prep: &Prepared,
) -> Result<(Option<usize>, TrajectoryRecord)> {
    let dt = protocol.tau / cfg.steps as f64;
    let noise = NoiseProcess::new(cfg.seed, cfg.stream_offset + i as u64, det.s0, dt);
    let (level, init) = match cfg.initial {
        InitialState::Explicit(rho) => (None, rho),
        InitialState::Eigenstate(n) => (Some(n), prep.basis_0.eigenstate(n)),
        InitialState::Thermal { .. } => {
            let n = usize::from(noise.auxiliary_uniform() >= prep.p0[0]);
            (Some(n), prep.basis_0.eigenstate(n))
        }
    };
    let reference = prep.references[level.unwrap_or(0)].as_ref();
    let mut controller = reference.map(|r| FeedbackController::new(*fb, r));
    let rec = integrate_trajectory(
        &init,
        protocol,
        det,
        &noise as &dyn NoiseSource,
        cfg.scheme,
        cfg.steps,
        controller.as_mut().map(|c| c as &mut dyn Controller),
    )
    .map_err(|e| match e {
        Error::Trajectory { clamp_events, source, .. } => Error::Trajectory {
            trajectory: i,
            clamp_events,
            source,
        },
        other => other,
    })?;
    Ok((level, rec))
}

/// Full record of trajectory `i` of an ensemble, identical to the one the
/// ensemble run integrates.
pub fn simulate_trajectory(
    i: usize,
    cfg: &EnsembleConfig,
    protocol: &DriveProtocol,
    det: &DetectorModel,
    fb: &FeedbackParams,
) -> Result<(Option<usize>, TrajectoryRecord)> {
    cfg.validate()?;
    fb.validate()?;
    if i >= cfg.n_traj {
        return Err(Error::Precondition(format!("trajectory {i} outside an ensemble of {}", cfg.n_traj)));
    }
    let prep = prepare(cfg, protocol, fb)?;
    simulate_prepared(i, cfg, protocol, det, fb, &prep)
}

fn run_one(
    i: usize,
    cfg: &EnsembleConfig,
    protocol: &DriveProtocol,
    det: &DetectorModel,
    fb: &FeedbackParams,
    prep: &Prepared,
) -> Result<(TrajectorySummary, Vec<[f64; 3]>)> {
    let (level, rec) = simulate_prepared(i, cfg, protocol, det, fb, prep)?;
    let column = match level {
        Some(n) => Some(record_column(n, &rec, &prep.basis_0, &prep.basis_tau)?),
        None => None,
    };
    let series = rec.states.iter().step_by(cfg.record_stride).map(components).collect();
    Ok((summarize(i, level, &rec, column), series))
}

fn summarize(index: usize, initial_level: Option<usize>, rec: &TrajectoryRecord, column: Option<TransitionColumn>) -> TrajectorySummary {
    let p_start = rec.initial_state().purity();
    let max_purity_drift = rec.states.iter().map(|s| (s.purity() - p_start).abs()).fold(0.0, f64::max);
    TrajectorySummary {
        index,
        initial_level,
        work: rec.ledger.w_cum,
        heat: rec.ledger.q_cum,
        delta_u: rec.ledger.delta_u(),
        clamp_events: rec.clamp_events,
        max_residual: rec.ledger.max_residual,
        max_purity_drift,
        final_state: *rec.final_state(),
        column,
    }
}

pub fn run_ensemble(
    cfg: &EnsembleConfig,
    protocol: &DriveProtocol,
    det: &DetectorModel,
    fb: &FeedbackParams,
) -> Result<EnsembleResult> {
    run_ensemble_with_workers(cfg, protocol, det, fb, 0)
}

/// As [`run_ensemble`] on a dedicated pool of `workers` threads
/// (0 = rayon's default).
pub fn run_ensemble_with_workers(
    cfg: &EnsembleConfig,
    protocol: &DriveProtocol,
    det: &DetectorModel,
    fb: &FeedbackParams,
    workers: usize,
) -> Result<EnsembleResult> {
    cfg.validate()?;
    protocol.validate()?;
    det.validate()?;
    fb.validate()?;
    let prep = prepare(cfg, protocol, fb)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<(TrajectorySummary, Vec<[f64; 3]>)>> = pool.install(|| {
        (0..cfg.n_traj)
            .into_par_iter()
            .map(|i| run_one(i, cfg, protocol, det, fb, &prep))
            .collect()
    });

    let mut summaries = Vec::with_capacity(cfg.n_traj);
    let mut series = Vec::with_capacity(cfg.n_traj);
    for outcome in outcomes {
        let (s, x) = outcome?;
        summaries.push(s);
        series.push(x);
    }
    reduce(cfg, protocol, summaries, series)
}

fn reduce(
    cfg: &EnsembleConfig,
    protocol: &DriveProtocol,
    summaries: Vec<TrajectorySummary>,
    series: Vec<Vec<[f64; 3]>>,
) -> Result<EnsembleResult> {
    let dt = protocol.tau / cfg.steps as f64;
    let n_rec = cfg.steps / cfg.record_stride + 1;
    let times = (0..n_rec).map(|j| (j * cfg.record_stride) as f64 * dt).collect();
    let mut mean_state = Vec::with_capacity(n_rec);
    let mut state_stderr = Vec::with_capacity(n_rec);
    let mut buf = vec![0.0; series.len()];
    for j in 0..n_rec {
        let mut mean = [0.0; 3];
        let mut err = [0.0; 3];
        for c in 0..3 {
            for (b, s) in buf.iter_mut().zip(&series) {
                *b = s[j][c];
            }
            let me = MeanError::of(&buf);
            mean[c] = me.mean;
            err[c] = me.stderr;
        }
        mean_state.push(mean);
        state_stderr.push(err);
    }

    let mut columns = [None, None];
    for (n, slot) in columns.iter_mut().enumerate() {
        let cols: Vec<TransitionColumn> = summaries
            .iter()
            .filter_map(|s| s.column)
            .filter(|c| c.n == n)
            .collect();
        if !cols.is_empty() {
            *slot = Some(ColumnStats::from_columns(n, &cols)?);
        }
    }

    let works: Vec<f64> = summaries.iter().map(|s| s.work).collect();
    let heats: Vec<f64> = summaries.iter().map(|s| s.heat).collect();
    let variance = |v: &[f64], me: &MeanError| me.stderr.powi(2) * v.len() as f64;
    let work = MeanError::of(&works);
    let heat = MeanError::of(&heats);
    Ok(EnsembleResult {
        config: *cfg,
        times,
        mean_state,
        state_stderr,
        columns,
        work_variance: variance(&works, &work),
        work,
        heat_variance: variance(&heats, &heat),
        heat,
        clamp_events: summaries.iter().map(|s| s.clamp_events).sum(),
        total_steps: cfg.steps * cfg.n_traj,
        max_residual: summaries.iter().map(|s| s.max_residual).fold(0.0, f64::max),
        max_purity_drift: summaries.iter().map(|s| s.max_purity_drift).fold(0.0, f64::max),
        trajectories: summaries,
    })
}

/// Two ensembles, one per initial eigenstate of `H_0`, and their combined
/// transition decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRun {
    pub decomposition: TransitionDecomposition,
    pub ensembles: [EnsembleResult; 2],
    /// Largest single-trajectory violation of `P^τ − δ = δP^W + δP^Q`.
    pub max_trajectory_gap: f64,
}

/// Runs `n_traj` trajectories from each eigenstate of `H_0`. Level `n` uses
/// streams `n·n_traj ..`, so runs that differ only in feedback share their
/// detector noise.
#[allow(clippy::too_many_arguments)]
pub fn run_transition_ensemble(
    n_traj: usize,
    seed: u64,
    scheme: Scheme,
    steps: usize,
    record_stride: usize,
    protocol: &DriveProtocol,
    det: &DetectorModel,
    fb: &FeedbackParams,
    workers: usize,
) -> Result<TransitionRun> {
    let run = |n: usize| {
        let cfg = EnsembleConfig {
            n_traj,
            seed,
            scheme,
            steps,
            record_stride,
            initial: InitialState::Eigenstate(n),
            stream_offset: (n * n_traj) as u64,
        };
        run_ensemble_with_workers(&cfg, protocol, det, fb, workers)
    };
    let e0 = run(0)?;
    let e1 = run(1)?;
    let missing = || Error::Numerical("eigenstate ensemble without transition column".into());
    let c0 = e0.columns[0].as_ref().ok_or_else(missing)?;
    let c1 = e1.columns[1].as_ref().ok_or_else(missing)?;
    let decomposition = TransitionDecomposition::from_columns([c0, c1])?;
    let max_trajectory_gap = e0
        .trajectories
        .iter()
        .chain(&e1.trajectories)
        .filter_map(|s| s.column.map(|c| c.identity_gap()))
        .fold(0.0, f64::max);
    Ok(TransitionRun {
        decomposition,
        ensembles: [e0, e1],
        max_trajectory_gap,
    })
}

/// Transition matrix `P^τ_{m,n}` of the unmonitored evolution on the
/// integrator grid.
pub fn unitary_transitions(protocol: &DriveProtocol, steps: usize) -> Result<[[f64; 2]; 2]> {
    let basis_0 = eigendecompose(&protocol.initial_hamiltonian());
    let basis_tau = eigendecompose(&protocol.final_hamiltonian());
    let mut p = [[0.0; 2]; 2];
    for n in 0..2 {
        let r = reference_trajectory(&basis_0.eigenstate(n), protocol, steps)?;
        let pops = basis_tau.populations(r.states.last().expect("nonempty reference"));
        for m in 0..2 {
            p[m][n] = pops[m];
        }
    }
    Ok(p)
}

/// RK4 substeps per grid step of [`lindblad_reference`].
const LINDBLAD_SUBSTEPS: usize = 8;

/// Ensemble-averaged dynamics: unitary evolution plus pure dephasing of the
/// coherence at `Γ = ΔI²/(4S_0)`, integrated by classical RK4. Returns
/// `steps + 1` states on the grid `t_k = kτ/steps`.
pub fn lindblad_reference(
    init: &DensityMatrix,
    protocol: &DriveProtocol,
    det: &DetectorModel,
    steps: usize,
) -> Result<Vec<DensityMatrix>> {
    protocol.validate()?;
    det.validate()?;
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            reason: "at least one step is required".into(),
        });
    }
    let gamma = det.dephasing_rate();
    let (eps, hbar) = (protocol.epsilon, protocol.hbar);
    let rhs = |t: f64, y: [f64; 3]| -> [f64; 3] {
        let lambda = protocol.g * protocol.envelope(t);
        let c = Complex64::new(y[1], y[2]);
        let i = Complex64::i();
        let d11 = -2.0 * lambda / hbar * c.im;
        let d12 = -2.0 * i * eps / hbar * c - i * lambda / hbar * (1.0 - 2.0 * y[0]) - gamma * c;
        [d11, d12.re, d12.im]
    };
    let dt = protocol.tau / steps as f64;
    let h = dt / LINDBLAD_SUBSTEPS as f64;
    let axpy = |y: &[f64; 3], a: f64, k: &[f64; 3]| [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]];

    let mut y = components(init);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(*init);
    for k in 0..steps {
        for s in 0..LINDBLAD_SUBSTEPS {
            let t = k as f64 * dt + s as f64 * h;
            let k1 = rhs(t, y);
            let k2 = rhs(t + 0.5 * h, axpy(&y, 0.5 * h, &k1));
            let k3 = rhs(t + 0.5 * h, axpy(&y, 0.5 * h, &k2));
            let k4 = rhs(t + h, axpy(&y, h, &k3));
            for c in 0..3 {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
        out.push(DensityMatrix::from_raw(y[0], Complex64::new(y[1], y[2])));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseProcess;
    use approx::assert_abs_diff_eq;

    fn protocol() -> DriveProtocol {
        DriveProtocol::new(0.625, 8.0, 30.0, 0.1).unwrap()
    }

    fn det() -> DetectorModel {
        DetectorModel::new(1.0, 2500.0, 0.0).unwrap()
    }

    fn cfg(n_traj: usize, steps: usize) -> EnsembleConfig {
        EnsembleConfig {
            n_traj,
            seed: 11,
            scheme: Scheme::default(),
            steps,
            record_stride: 10,
            initial: InitialState::Eigenstate(0),
            stream_offset: 0,
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0, 100).validate().is_err());
        assert!(cfg(1, 0).validate().is_err());
        let mut c = cfg(1, 105);
        assert!(c.validate().is_err());
        c.record_stride = 5;
        assert!(c.validate().is_ok());
        c.initial = InitialState::Eigenstate(2);
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_trajectory_reduces_to_integrate() {
        let p = protocol();
        let c = cfg(1, 300);
        let res = run_ensemble(&c, &p, &det(), &FeedbackParams::off()).unwrap();
        let init = eigendecompose(&p.initial_hamiltonian()).eigenstate(0);
        let noise = NoiseProcess::new(11, 0, 2500.0, p.tau / 300.0);
        let rec = integrate_trajectory(&init, &p, &det(), &noise, Scheme::default(), 300, None).unwrap();
        assert_eq!(res.trajectories[0].final_state, *rec.final_state());
        assert_eq!(res.mean_state.last().unwrap(), &components(rec.final_state()));
        assert_eq!(res.state_stderr[3], [0.0; 3]);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = protocol();
        let mut c = cfg(24, 300);
        c.initial = InitialState::Thermal { beta: 10.0 };
        let fb = FeedbackParams::new(3.0, true).unwrap();
        let a = run_ensemble_with_workers(&c, &p, &det(), &fb, 1).unwrap();
        let b = run_ensemble_with_workers(&c, &p, &det(), &fb, 4).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn lindblad_closed_form_without_drive() {
        let p = DriveProtocol::new(0.0, 8.0, 30.0, 0.1).unwrap();
        let d = DetectorModel::new(1.0, 25.0, 0.0).unwrap();
        let init = DensityMatrix::new(0.5, Complex64::new(0.3, 0.2)).unwrap();
        let series = lindblad_reference(&init, &p, &d, 3000).unwrap();
        let gamma = d.dephasing_rate();
        for (k, s) in series.iter().enumerate() {
            let t = k as f64 * 0.01;
            assert_abs_diff_eq!(s.rho12().norm(), init.rho12().norm() * (-gamma * t).exp(), epsilon = 1e-8);
            assert_eq!(s.rho11() + s.rho22(), 1.0);
        }
    }

    #[test]
    fn lindblad_without_measurement_is_the_unitary_flow() {
        let p = protocol();
        let init = DensityMatrix::ket1();
        let lin = lindblad_reference(&init, &p, &DetectorModel::disconnected(), 3000).unwrap();
        let uni = reference_trajectory(&init, &p, 3000).unwrap();
        for (a, b) in lin.iter().zip(&uni.states) {
            assert!(a.delta_to(b).max_abs() < 1e-6);
        }
        assert!((lin.last().unwrap().purity() - 1.0).abs() < 1e-9);
    }
}
