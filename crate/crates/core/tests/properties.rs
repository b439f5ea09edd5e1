use num_complex::Complex64;
use proptest::prelude::*;

use qubit_thermo::ensemble::{run_ensemble, EnsembleConfig, InitialState};
use qubit_thermo::feedback::{
    phase_error, reference_trajectory, FeedbackController, FeedbackParams,
};
use qubit_thermo::noise::NoiseProcess;
use qubit_thermo::qubit::{eigendecompose, DensityMatrix, DriveProtocol, QubitOperator};
use qubit_thermo::sme::{integrate_trajectory, DetectorModel, Scheme};
use qubit_thermo::thermo::{record_column, tpm_distribution, jarzynski_estimate};

fn preset_protocol(tau: f64) -> DriveProtocol {
    DriveProtocol::new(0.625, 8.0, tau, 0.1).unwrap()
}

fn preset_detector() -> DetectorModel {
    DetectorModel::new(1.0, 2500.0, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn first_law_and_identity_hold_for_any_parameters(
        g in 0.0f64..1.5,
        nu in 0.0f64..10.0,
        eps in -0.5f64..0.5,
        s0 in 5.0f64..5000.0,
        seed in any::<u64>(),
        level in 0usize..2,
        scheme_ix in 0usize..3,
    ) {
        let p = DriveProtocol::new(g, nu, 5.0, eps).unwrap();
        let det = DetectorModel::new(1.0, s0, 0.0).unwrap();
        let scheme = [Scheme::Bayesian, Scheme::StratonovichHeun, Scheme::ItoEuler][scheme_ix];
        let b0 = eigendecompose(&p.initial_hamiltonian());
        let bt = eigendecompose(&p.final_hamiltonian());
        let noise = NoiseProcess::new(seed, 0, s0, 0.01);
        let rec = match integrate_trajectory(&b0.eigenstate(level), &p, &det, &noise, scheme, 500, None) {
            Ok(rec) => rec,
            // explicit schemes may leave the state set for strong detectors
            Err(_) if scheme != Scheme::Bayesian => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        for th in &rec.thermo {
            prop_assert!((th.du - th.dw - th.dq).abs() < 1e-12);
        }
        prop_assert!(rec.ledger.first_law_gap().abs() < 1e-12);
        let col = record_column(level, &rec, &b0, &bt).unwrap();
        prop_assert!(col.identity_gap() < 1e-10);
        prop_assert!((col.p_tau[0] + col.p_tau[1] - 1.0).abs() < 1e-12);
        for s in &rec.states {
            prop_assert!(s.bloch_norm_sqr() <= 1.0 + 1e-12);
        }
        if scheme == Scheme::Bayesian {
            for s in &rec.states {
                prop_assert!((s.purity() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn phase_error_is_wrapped_and_antisymmetric(
        a in -3.0f64..3.0, b in -3.0f64..3.0, ra in 0.1f64..1.0, rb in 0.1f64..1.0, x in -0.05f64..0.05,
    ) {
        let sa = DensityMatrix::from_bloch(x, ra * a.sin(), ra * a.cos()).unwrap();
        let sb = DensityMatrix::from_bloch(x, rb * b.sin(), rb * b.cos()).unwrap();
        let d = phase_error(&sa, &sb);
        prop_assert!(d > -std::f64::consts::PI && d <= std::f64::consts::PI);
        let back = phase_error(&sb, &sa);
        if d.abs() < std::f64::consts::PI - 1e-9 {
            prop_assert!((d + back).abs() < 1e-12);
        }
        // shift of a full turn leaves it unchanged
        let a2 = a + std::f64::consts::TAU;
        let sa2 = DensityMatrix::from_bloch(x, ra * a2.sin(), ra * a2.cos()).unwrap();
        prop_assert!((phase_error(&sa2, &sb) - d).abs() < 1e-9);
    }

    #[test]
    fn tpm_distribution_is_normalized(q0 in 0.0f64..1.0, q1 in 0.0f64..1.0, lam in 0.0f64..1.0, beta in 0.1f64..20.0) {
        let h0 = QubitOperator::driven_qubit(0.1, 0.01);
        let ht = QubitOperator::driven_qubit(0.1, lam);
        let (b0, bt) = (eigendecompose(&h0), eigendecompose(&ht));
        let pt = [[1.0 - q0, q1], [q0, 1.0 - q1]];
        let p0 = qubit_thermo::qubit::thermal_populations(
            &qubit_thermo::qubit::ThermalSpec::new(beta).unwrap(), &b0);
        let dist = tpm_distribution(p0, &pt, &b0, &bt).unwrap();
        prop_assert!((dist.total() - 1.0).abs() < 1e-12);
        prop_assert!(dist.support.windows(2).all(|w| w[0] < w[1]));
        let est = jarzynski_estimate(&dist, beta).unwrap();
        // Jensen: ΔF_est ≤ ⟨W⟩
        prop_assert!(est <= dist.mean() + 1e-12);
    }
}

#[test]
fn reference_matches_halved_step_richardson_oracle() {
    // The reference is second order in dt; extrapolating dt/2 and dt/4
    // runs gives an oracle of higher order.
    let p = preset_protocol(30.0);
    let init = DensityMatrix::ket1();
    let r1 = reference_trajectory(&init, &p, 3000).unwrap();
    let r2 = reference_trajectory(&init, &p, 6000).unwrap();
    let r4 = reference_trajectory(&init, &p, 12000).unwrap();
    let comps = |s: &DensityMatrix| [s.rho11(), s.rho12().re, s.rho12().im];
    let (a, b, c) = (
        comps(r1.states.last().unwrap()),
        comps(r2.states.last().unwrap()),
        comps(r4.states.last().unwrap()),
    );
    for i in 0..3 {
        let oracle = c[i] + (c[i] - b[i]) / 3.0;
        assert!((a[i] - oracle).abs() < 1e-8, "component {i}: {} vs {oracle}", a[i]);
        // observed convergence order ≈ 2
        let ratio = (a[i] - b[i]) / (b[i] - c[i]);
        assert!((ratio - 4.0).abs() < 0.2 || (a[i] - b[i]).abs() < 1e-13, "ratio {ratio}");
    }
}

#[test]
fn feedback_tracks_reference_phase() {
    let p = preset_protocol(14.0);
    let det = preset_detector();
    let init = eigendecompose(&p.initial_hamiltonian()).eigenstate(0);
    let reference = reference_trajectory(&init, &p, 1400).unwrap();
    let mut rms = [0.0; 2];
    for (slot, enabled) in [false, true].into_iter().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..40 {
            let noise = NoiseProcess::new(2015, i, det.s0, 0.01);
            let mut ctl = FeedbackController::new(FeedbackParams::new(3.0, enabled).unwrap(), &reference);
            integrate_trajectory(&init, &p, &det, &noise, Scheme::Bayesian, 1400, Some(&mut ctl)).unwrap();
            sum += ctl.phase_errors.iter().map(|d| d * d).sum::<f64>();
            count += ctl.phase_errors.len();
        }
        rms[slot] = (sum / count as f64).sqrt();
    }
    assert!(rms[1] < rms[0], "phase error rms with feedback {} vs without {}", rms[1], rms[0]);
}

fn ensemble(n_traj: usize, s0: f64, seed: u64) -> qubit_thermo::ensemble::EnsembleResult {
    let p = preset_protocol(10.0);
    let cfg = EnsembleConfig {
        n_traj,
        seed,
        scheme: Scheme::Bayesian,
        steps: 1000,
        record_stride: 100,
        initial: InitialState::Eigenstate(0),
        stream_offset: 0,
    };
    run_ensemble(&cfg, &p, &DetectorModel::new(1.0, s0, 0.0).unwrap(), &FeedbackParams::off()).unwrap()
}

#[test]
fn standard_errors_scale_with_ensemble_size() {
    let small = ensemble(200, 250.0, 3);
    let large = ensemble(800, 250.0, 4);
    let j = small.mean_state.len() - 1;
    for c in 0..3 {
        let ratio = small.state_stderr[j][c] / large.state_stderr[j][c];
        // √4 = 2 with a generous sampling margin
        assert!((1.6..2.5).contains(&ratio), "component {c}: ratio {ratio}");
    }
}

#[test]
fn heat_variance_grows_with_measurement_strength() {
    let v: Vec<f64> = [2500.0, 250.0, 25.0].iter().map(|&s0| ensemble(200, s0, 5).heat_variance).collect();
    assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
}

#[test]
fn silent_detector_ensemble_is_unitary() {
    let p = preset_protocol(10.0);
    let cfg = EnsembleConfig {
        n_traj: 5,
        seed: 1,
        scheme: Scheme::Bayesian,
        steps: 1000,
        record_stride: 1000,
        initial: InitialState::Explicit(DensityMatrix::new(0.9, Complex64::new(0.1, 0.2)).unwrap()),
        stream_offset: 0,
    };
    let res = run_ensemble(&cfg, &p, &DetectorModel::disconnected(), &FeedbackParams::off()).unwrap();
    assert!(res.state_stderr.iter().flatten().all(|&s| s == 0.0));
    assert_eq!(res.heat.mean, 0.0);
    assert_eq!(res.clamp_events, 0);
}
