//! Experiment configuration, presets and result files.
//!
//! Configs are flat TOML with dotted keys:
//!
//! ```toml
//! preset = "fig3a"
//! drive.tau_steps = 1400
//! feedback.f = 3.0
//! ```
//!
//! Keys not listed in [`KEYS`] are rejected with their full path. Every run
//! writes `resolved_config.toml`, which reproduces the run bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::{
    run_ensemble_with_workers, run_transition_ensemble, simulate_trajectory, unitary_transitions, EnsembleConfig,
    InitialState, TransitionRun,
};
use crate::error::{Error, Result};
use crate::feedback::FeedbackParams;
use crate::qubit::{eigendecompose, free_energy_difference, thermal_populations, DriveProtocol, ThermalSpec};
use crate::sme::{DetectorModel, Scheme};
use crate::thermo::{jarzynski_from_transitions, StepThermo, TransitionDecomposition};

/// Free-energy values quoted for the driven qubit at `β = 10`: the unitary
/// protocol, and feedback runs at 1400 and 2500 steps.
pub const REFERENCE_DELTA_F_UNITARY: f64 = -0.495;
pub const REFERENCE_DELTA_F_FEEDBACK: [(usize, f64); 2] = [(1400, -0.488), (2500, -0.496)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3a,
    Fig3b,
    Jarzynski,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig1, Preset::Fig2, Preset::Fig3a, Preset::Fig3b, Preset::Jarzynski];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Jarzynski => "jarzynski",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config {
                key: "preset".into(),
                reason: format!("unknown preset `{s}`"),
            })
    }
}

/// All parameters of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub epsilon: f64,
    pub g: f64,
    pub nu: f64,
    pub tau_steps: usize,
    pub dt: f64,
    pub delta_i: f64,
    pub s0: f64,
    pub i0: f64,
    pub beta: f64,
    pub scheme: Scheme,
    /// Trajectories per initial eigenstate for transition presets.
    pub n_traj: usize,
    pub seed: u64,
    pub record_stride: usize,
    pub f: f64,
    pub feedback: bool,
}

/// Recognized config keys, in the order they are written.
pub const KEYS: [&str; 16] = [
    "preset",
    "drive.epsilon",
    "drive.g",
    "drive.nu",
    "drive.tau_steps",
    "drive.dt",
    "detector.delta_i",
    "detector.s0",
    "detector.i0",
    "thermal.beta",
    "run.scheme",
    "run.n_traj",
    "run.seed",
    "run.record_stride",
    "feedback.f",
    "feedback.enabled",
];

impl ExperimentConfig {
    /// Defaults of a preset. All presets share the physical parameters
    /// `S_0/ΔI² = 2.5·10⁵ dt`, `ħ/g = 160 dt`, `ħ/ε = 10³ dt`, `ν = 8`.
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            preset,
            epsilon: 0.1,
            g: 0.625,
            nu: 8.0,
            tau_steps: 3000,
            dt: 0.01,
            delta_i: 1.0,
            s0: 2500.0,
            i0: 0.0,
            beta: 10.0,
            scheme: Scheme::Bayesian,
            n_traj: 300,
            seed: 2015,
            record_stride: 10,
            f: 3.0,
            feedback: false,
        };
        match preset {
            Preset::Fig1 => Self { record_stride: 1, ..base },
            Preset::Fig2 => base,
            Preset::Fig3a => Self {
                tau_steps: 1400,
                feedback: true,
                ..base
            },
            Preset::Fig3b => Self {
                tau_steps: 2500,
                feedback: true,
                ..base
            },
            Preset::Jarzynski => Self {
                tau_steps: 1400,
                feedback: true,
                ..base
            },
        }
    }

    pub fn protocol(&self) -> Result<DriveProtocol> {
        DriveProtocol::new(self.g, self.nu, self.tau_steps as f64 * self.dt, self.epsilon)
    }

    pub fn detector(&self) -> Result<DetectorModel> {
        DetectorModel::new(self.delta_i, self.s0, self.i0)
    }

    pub fn feedback_params(&self) -> Result<FeedbackParams> {
        FeedbackParams::new(self.f, self.feedback)
    }

    /// `(S_0/ΔI², ħ/g, ħ/ε)` in units of `dt`, and `τ` in steps.
    pub fn caption_ratios(&self) -> [f64; 4] {
        let hbar = 1.0;
        [
            self.s0 / (self.delta_i * self.delta_i) / self.dt,
            hbar / self.g / self.dt,
            hbar / self.epsilon / self.dt,
            self.tau_steps as f64,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |key: &str, reason: &str| {
            Err(Error::Config {
                key: key.into(),
                reason: reason.into(),
            })
        };
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return cfg_err("drive.dt", "must be positive");
        }
        if self.tau_steps == 0 {
            return cfg_err("drive.tau_steps", "must be at least 1");
        }
        if self.n_traj == 0 {
            return cfg_err("run.n_traj", "must be at least 1");
        }
        if self.record_stride == 0 || !self.tau_steps.is_multiple_of(self.record_stride) {
            return cfg_err("run.record_stride", "must be positive and divide drive.tau_steps");
        }
        ThermalSpec::new(self.beta).map_err(|e| Error::Config {
            key: "thermal.beta".into(),
            reason: e.to_string(),
        })?;
        self.protocol().map_err(|e| Error::Config {
            key: "drive".into(),
            reason: e.to_string(),
        })?;
        self.detector().map_err(|e| Error::Config {
            key: "detector".into(),
            reason: e.to_string(),
        })?;
        self.feedback_params().map_err(|e| Error::Config {
            key: "feedback.f".into(),
            reason: e.to_string(),
        })?;
        Ok(())
    }

    /// Parses a config file body. A `preset` key selects the defaults that
    /// the remaining keys override; without it `fig1` is assumed.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            key: "<file>".into(),
            reason: e.message().to_string(),
        })?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut cfg = match flat.iter().find(|(k, _)| k == "preset") {
            Some((k, v)) => Self::preset(v.as_str().ok_or_else(|| type_error(k, "a string"))?.parse()?),
            None => Self::preset(Preset::Fig1),
        };
        for (key, value) in &flat {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &toml::Value) -> Result<()> {
        let float = || {
            v.as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| type_error(key, "a number"))
        };
        let count = || {
            v.as_integer()
                .and_then(|i| usize::try_from(i).ok())
                .ok_or_else(|| type_error(key, "a nonnegative integer"))
        };
        match key {
            "preset" => {}
            "drive.epsilon" => self.epsilon = float()?,
            "drive.g" => self.g = float()?,
            "drive.nu" => self.nu = float()?,
            "drive.tau_steps" => self.tau_steps = count()?,
            "drive.dt" => self.dt = float()?,
            "detector.delta_i" => self.delta_i = float()?,
            "detector.s0" => self.s0 = float()?,
            "detector.i0" => self.i0 = float()?,
            "thermal.beta" => self.beta = float()?,
            "run.scheme" => {
                let s = v.as_str().ok_or_else(|| type_error(key, "a scheme name"))?;
                self.scheme = s.parse().map_err(|e: Error| Error::Config {
                    key: key.into(),
                    reason: e.to_string(),
                })?;
            }
            "run.n_traj" => self.n_traj = count()?,
            "run.seed" => {
                self.seed = match v {
                    toml::Value::Integer(i) => u64::try_from(*i).map_err(|_| type_error(key, "a nonnegative integer"))?,
                    toml::Value::String(s) => s.parse().map_err(|_| type_error(key, "an unsigned 64-bit integer"))?,
                    _ => return Err(type_error(key, "an unsigned 64-bit integer")),
                }
            }
            "run.record_stride" => self.record_stride = count()?,
            "feedback.f" => self.f = float()?,
            "feedback.enabled" => self.feedback = v.as_bool().ok_or_else(|| type_error(key, "a boolean"))?,
            _ => {
                return Err(Error::Config {
                    key: key.into(),
                    reason: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    /// Flat dotted-key TOML that parses back to `self`.
    pub fn to_toml_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("preset", format!("\"{}\"", self.preset.name()));
        put("drive.epsilon", format!("{:?}", self.epsilon));
        put("drive.g", format!("{:?}", self.g));
        put("drive.nu", format!("{:?}", self.nu));
        put("drive.tau_steps", self.tau_steps.to_string());
        put("drive.dt", format!("{:?}", self.dt));
        put("detector.delta_i", format!("{:?}", self.delta_i));
        put("detector.s0", format!("{:?}", self.s0));
        put("detector.i0", format!("{:?}", self.i0));
        put("thermal.beta", format!("{:?}", self.beta));
        put("run.scheme", format!("\"{}\"", self.scheme.name()));
        put("run.n_traj", self.n_traj.to_string());
        put(
            "run.seed",
            if self.seed <= i64::MAX as u64 {
                self.seed.to_string()
            } else {
                format!("\"{}\"", self.seed)
            },
        );
        put("run.record_stride", self.record_stride.to_string());
        put("feedback.f", format!("{:?}", self.f));
        put("feedback.enabled", self.feedback.to_string());
        s
    }
}

fn type_error(key: &str, expected: &str) -> Error {
    Error::Config {
        key: key.into(),
        reason: format!("expected {expected}"),
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

/// Per-run settings that do not affect results.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; 0 picks the rayon default.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Summary {
    pub config: ExperimentConfig,
    pub trajectory: usize,
    pub initial_level: Option<usize>,
    pub work: f64,
    pub heat: f64,
    pub delta_u: f64,
    pub closing_work: f64,
    pub max_step_residual: f64,
    pub clamp_events: usize,
    pub ensemble_max_step_residual: f64,
    pub ensemble_clamp_events: usize,
    pub ensemble_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionReport {
    pub config: ExperimentConfig,
    pub feedback: bool,
    pub p0: [[f64; 2]; 2],
    pub p_tau: [[f64; 2]; 2],
    pub dp_w: [[f64; 2]; 2],
    pub dp_q: [[f64; 2]; 2],
    pub p_tau_stderr: [[f64; 2]; 2],
    pub dp_w_stderr: [[f64; 2]; 2],
    pub dp_q_stderr: [[f64; 2]; 2],
    pub n_traj: [usize; 2],
    pub max_trajectory_gap: f64,
    pub clamp_events: usize,
    pub total_steps: usize,
}

impl TransitionReport {
    fn new(config: &ExperimentConfig, feedback: bool, run: &TransitionRun) -> Self {
        let d = &run.decomposition;
        Self {
            config: *config,
            feedback,
            p0: d.p0,
            p_tau: d.p_tau,
            dp_w: d.dp_w,
            dp_q: d.dp_q,
            p_tau_stderr: d.p_tau_stderr,
            dp_w_stderr: d.dp_w_stderr,
            dp_q_stderr: d.dp_q_stderr,
            n_traj: d.n_traj,
            max_trajectory_gap: run.max_trajectory_gap,
            clamp_events: run.ensembles.iter().map(|e| e.clamp_events).sum(),
            total_steps: run.ensembles.iter().map(|e| e.total_steps).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackComparison {
    pub config: ExperimentConfig,
    pub unitary_p_tau: [[f64; 2]; 2],
    pub with_feedback: TransitionReport,
    pub without_feedback: TransitionReport,
    /// `|P^τ_fb − P^τ_unitary| / stderr` per entry.
    pub feedback_z_scores: [[f64; 2]; 2],
    /// `|δP^Q_fb| < |δP^Q_nofb|` per entry.
    pub heat_suppressed: [[bool; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JarzynskiReport {
    pub config: ExperimentConfig,
    pub beta: f64,
    pub feedback: bool,
    pub delta_f_est: f64,
    pub delta_f_stderr: f64,
    pub delta_f_exact: f64,
    pub delta_f_unitary: f64,
    pub relative_deviation: f64,
    pub paper_reference: f64,
    pub reference_feedback: Option<f64>,
    pub p0_populations: [f64; 2],
    pub p_tau: [[f64; 2]; 2],
    pub p_tau_stderr: [[f64; 2]; 2],
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Fig1(Fig1Summary),
    Transitions(TransitionReport),
    Feedback(FeedbackComparison),
    Jarzynski(JarzynskiReport),
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
}

fn transition_run(cfg: &ExperimentConfig, fb: &FeedbackParams, workers: usize) -> Result<TransitionRun> {
    let run = run_transition_ensemble(
        cfg.n_traj,
        cfg.seed,
        cfg.scheme,
        cfg.tau_steps,
        cfg.record_stride,
        &cfg.protocol()?,
        &cfg.detector()?,
        fb,
        workers,
    )?;
    run.decomposition.check_invariants()?;
    if run.max_trajectory_gap > crate::thermo::TRANSITION_TOLERANCE {
        return Err(Error::OutputInvariant(format!(
            "single-trajectory decomposition identity off by {:e}",
            run.max_trajectory_gap
        )));
    }
    Ok(run)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_transition_csv(path: &Path, rows: &[(&str, &TransitionDecomposition)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "variant",
        "m",
        "n",
        "p0",
        "p_tau",
        "p_tau_stderr",
        "dp_w",
        "dp_w_stderr",
        "dp_q",
        "dp_q_stderr",
    ])?;
    for (variant, d) in rows {
        for n in 0..2 {
            for m in 0..2 {
                w.write_record([
                    variant.to_string(),
                    m.to_string(),
                    n.to_string(),
                    sci(d.p0[m][n]),
                    sci(d.p_tau[m][n]),
                    sci(d.p_tau_stderr[m][n]),
                    sci(d.dp_w[m][n]),
                    sci(d.dp_w_stderr[m][n]),
                    sci(d.dp_q[m][n]),
                    sci(d.dp_q_stderr[m][n]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Column order of the fig1 trajectory file.
pub const TRAJECTORY_COLUMNS: [&str; 12] = [
    "step", "t", "rho11", "re_rho12", "im_rho12", "xi", "current", "dW", "dQ", "dU", "W_cum", "Q_cum",
];

fn run_fig1(cfg: &ExperimentConfig, opts: &RunOptions, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let protocol = cfg.protocol()?;
    let det = cfg.detector()?;
    let fb = cfg.feedback_params()?;
    let ens_cfg = EnsembleConfig {
        n_traj: cfg.n_traj,
        seed: cfg.seed,
        scheme: cfg.scheme,
        steps: cfg.tau_steps,
        record_stride: cfg.record_stride,
        initial: InitialState::Thermal { beta: cfg.beta },
        stream_offset: 0,
    };
    let ensemble = run_ensemble_with_workers(&ens_cfg, &protocol, &det, &fb, opts.workers)?;
    let (level, rec) = simulate_trajectory(0, &ens_cfg, &protocol, &det, &fb)?;

    let gap = rec.ledger.first_law_gap();
    if gap.abs() > 1e-9 {
        return Err(Error::OutputInvariant(format!("integrated first law off by {gap:e}")));
    }

    let path = opts.out_dir.join("fig1_trajectory.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(TRAJECTORY_COLUMNS)?;
    let (mut w_cum, mut q_cum) = (0.0, 0.0);
    for k in 0..=rec.steps() {
        // row k carries the increments of the step ending at t_k
        let (xi, current, th) = match k.checked_sub(1) {
            None => (0.0, f64::NAN, StepThermo::default()),
            Some(j) => (rec.decompositions[j].xi, rec.currents[j], rec.thermo[j]),
        };
        w_cum += th.dw;
        q_cum += th.dq;
        if k % cfg.record_stride != 0 {
            continue;
        }
        let s = &rec.states[k];
        w.write_record([
            k.to_string(),
            sci(rec.times[k]),
            sci(s.rho11()),
            sci(s.rho12().re),
            sci(s.rho12().im),
            sci(xi),
            sci(current),
            sci(th.dw),
            sci(th.dq),
            sci(th.du),
            sci(w_cum),
            sci(q_cum),
        ])?;
    }
    w.flush()?;
    files.push(path);

    let summary = Fig1Summary {
        config: *cfg,
        trajectory: 0,
        initial_level: level,
        work: rec.ledger.w_cum,
        heat: rec.ledger.q_cum,
        delta_u: rec.ledger.delta_u(),
        closing_work: rec.closing.dw,
        max_step_residual: rec.ledger.max_residual,
        clamp_events: rec.clamp_events,
        ensemble_max_step_residual: ensemble.max_residual,
        ensemble_clamp_events: ensemble.clamp_events,
        ensemble_steps: ensemble.total_steps,
    };
    let path = opts.out_dir.join("fig1_summary.json");
    write_json(&path, &summary)?;
    files.push(path);
    Ok(Outcome::Fig1(summary))
}

fn run_fig2(cfg: &ExperimentConfig, opts: &RunOptions, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let run = transition_run(cfg, &cfg.feedback_params()?, opts.workers)?;
    let report = TransitionReport::new(cfg, cfg.feedback, &run);
    let path = opts.out_dir.join("transitions.json");
    write_json(&path, &report)?;
    files.push(path);
    let path = opts.out_dir.join("transitions.csv");
    let variant = if cfg.feedback { "feedback" } else { "no_feedback" };
    write_transition_csv(&path, &[(variant, &run.decomposition)])?;
    files.push(path);
    Ok(Outcome::Transitions(report))
}

/// Runs the same detector records with and without feedback and compares
/// both against the unmonitored evolution.
pub fn feedback_comparison(cfg: &ExperimentConfig, workers: usize) -> Result<(FeedbackComparison, [TransitionRun; 2])> {
    let protocol = cfg.protocol()?;
    let on = transition_run(cfg, &FeedbackParams::new(cfg.f, true)?, workers)?;
    let off = transition_run(cfg, &FeedbackParams::new(cfg.f, false)?, workers)?;
    let unitary = unitary_transitions(&protocol, cfg.tau_steps)?;
    let mut z = [[0.0; 2]; 2];
    let mut suppressed = [[false; 2]; 2];
    for m in 0..2 {
        for n in 0..2 {
            let d = &on.decomposition;
            z[m][n] = (d.p_tau[m][n] - unitary[m][n]).abs() / d.p_tau_stderr[m][n];
            suppressed[m][n] = d.dp_q[m][n].abs() < off.decomposition.dp_q[m][n].abs();
        }
    }
    let cmp = FeedbackComparison {
        config: *cfg,
        unitary_p_tau: unitary,
        with_feedback: TransitionReport::new(cfg, true, &on),
        without_feedback: TransitionReport::new(cfg, false, &off),
        feedback_z_scores: z,
        heat_suppressed: suppressed,
    };
    Ok((cmp, [on, off]))
}

fn run_fig3(cfg: &ExperimentConfig, opts: &RunOptions, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let (cmp, [on, off]) = feedback_comparison(cfg, opts.workers)?;
    let stem = cfg.preset.name();
    let path = opts.out_dir.join(format!("{stem}.json"));
    write_json(&path, &cmp)?;
    files.push(path);
    let path = opts.out_dir.join(format!("{stem}_transitions.csv"));
    let unitary = TransitionDecomposition::exact(cmp.unitary_p_tau);
    write_transition_csv(
        &path,
        &[
            ("feedback", &on.decomposition),
            ("no_feedback", &off.decomposition),
            ("unitary", &unitary),
        ],
    )?;
    files.push(path);
    Ok(Outcome::Feedback(cmp))
}

/// Jarzynski estimate from the transition statistics of `cfg`.
pub fn jarzynski_report(cfg: &ExperimentConfig, workers: usize) -> Result<JarzynskiReport> {
    let protocol = cfg.protocol()?;
    let spec = ThermalSpec::new(cfg.beta)?;
    let h0 = protocol.initial_hamiltonian();
    let ht = protocol.final_hamiltonian();
    let basis_0 = eigendecompose(&h0);
    let basis_tau = eigendecompose(&ht);
    let p0 = thermal_populations(&spec, &basis_0);
    let run = transition_run(cfg, &cfg.feedback_params()?, workers)?;
    let est = jarzynski_from_transitions(&run.decomposition, p0, &basis_0, &basis_tau, cfg.beta)?;
    let unitary = TransitionDecomposition::exact(unitary_transitions(&protocol, cfg.tau_steps)?);
    let est_unitary = jarzynski_from_transitions(&unitary, p0, &basis_0, &basis_tau, cfg.beta)?;
    let exact = free_energy_difference(&spec, &h0, &ht)?;
    let reference_fb = REFERENCE_DELTA_F_FEEDBACK
        .iter()
        .find(|(steps, _)| cfg.feedback && *steps == cfg.tau_steps)
        .map(|(_, v)| *v);
    Ok(JarzynskiReport {
        config: *cfg,
        beta: cfg.beta,
        feedback: cfg.feedback,
        delta_f_est: est.delta_f,
        delta_f_stderr: est.stderr,
        delta_f_exact: exact,
        delta_f_unitary: est_unitary.delta_f,
        relative_deviation: (est.delta_f - exact).abs() / exact.abs(),
        paper_reference: REFERENCE_DELTA_F_UNITARY,
        reference_feedback: reference_fb,
        p0_populations: p0,
        p_tau: run.decomposition.p_tau,
        p_tau_stderr: run.decomposition.p_tau_stderr,
    })
}

fn run_jarzynski(cfg: &ExperimentConfig, opts: &RunOptions, files: &mut Vec<PathBuf>) -> Result<Outcome> {
    let report = jarzynski_report(cfg, opts.workers)?;
    let path = opts.out_dir.join("jarzynski.json");
    write_json(&path, &report)?;
    files.push(path);
    Ok(Outcome::Jarzynski(report))
}

/// Validates `cfg`, runs it and writes results plus
/// `resolved_config.toml` into `opts.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunArtifacts> {
    cfg.validate()?;
    fs::create_dir_all(&opts.out_dir)?;
    let mut files = Vec::new();
    let outcome = match cfg.preset {
        Preset::Fig1 => run_fig1(cfg, opts, &mut files)?,
        Preset::Fig2 => run_fig2(cfg, opts, &mut files)?,
        Preset::Fig3a | Preset::Fig3b => run_fig3(cfg, opts, &mut files)?,
        Preset::Jarzynski => run_jarzynski(cfg, opts, &mut files)?,
    };
    let path = opts.out_dir.join("resolved_config.toml");
    fs::write(&path, cfg.to_toml_string())?;
    files.push(path);
    Ok(RunArtifacts { outcome, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caption_ratios_of_default_preset() {
        let r = ExperimentConfig::preset(Preset::Fig1).caption_ratios();
        let expected = [2.5e5, 160.0, 1000.0, 3000.0];
        for (a, b) in r.iter().zip(expected) {
            assert!((a / b - 1.0).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn toml_round_trip() {
        for p in Preset::ALL {
            let mut cfg = ExperimentConfig::preset(p);
            cfg.seed = u64::MAX - 3;
            cfg.dt = 0.1 + 0.2;
            let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn unknown_key_reports_path() {
        let err = ExperimentConfig::from_toml_str("preset = \"fig2\"\nfeedback.gain = 3\n").unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "feedback.gain"),
            other => panic!("unexpected {other}"),
        }
        let err = ExperimentConfig::from_toml_str("[drive]\ntau_steps = \"long\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "drive.tau_steps"));
        let err = ExperimentConfig::from_toml_str("run.record_stride = 7\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "run.record_stride"));
    }

    #[test]
    fn preset_key_selects_defaults() {
        let cfg = ExperimentConfig::from_toml_str("preset = \"fig3b\"\nrun.n_traj = 12\n").unwrap();
        assert_eq!(cfg.tau_steps, 2500);
        assert_eq!(cfg.n_traj, 12);
        assert!(cfg.feedback);
    }
}
