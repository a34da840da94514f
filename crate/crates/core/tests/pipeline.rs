//! End-to-end recoveries for each instance kind, checked against the
//! forward models and the independent oracles.

mod common;

use common::*;
use prony::channel::{recover_multi, torus_distance, ChannelModel, ChannelPath};
use prony::classic::{circle_distance, classic_model};
use prony::confluent::{confluent_model, recover_polynomials};
use prony::dynamical::{check_observability, fourier_basis, standard_basis};
use prony::oracle::{add_noise, brute_force_annihilator, synthesize, InstanceTruth, Noise, SynthesisRequest};
use prony::problem::Problem;
use prony::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn classic_matches_oracle_annihilator() {
    let inst = ClassicInstance::default();
    let model = classic_model(&[(0.05, c(1.0, 0.0)), (0.4, c(0.0, 2.0)), (0.72, c(-0.5, 0.5))]).unwrap();
    let cfg = RecoveryConfig::new(3, 1);
    let y = inst.measure(&model, cfg.required_l()).unwrap();
    let ours = minimal_annihilator(&y, &cfg).unwrap();
    let brute = brute_force_annihilator(&y, 3).unwrap();
    for (a, b) in ours.poly.coeffs().iter().zip(brute.coeffs()) {
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }
    let rec = run_recovery(&y, &inst, &cfg).unwrap();
    assert!(rec.is_clean());
    for (got, want) in rec.model.modes.iter().zip(&model.modes) {
        assert!(circle_distance(got.gamma, want.gamma) < 1e-12);
        assert!((got.coeffs[0] - want.coeffs[0]).norm() < 1e-10);
    }
}

#[test]
fn classic_noise_degrades_gracefully() {
    let inst = ClassicInstance::default();
    let model = classic_model(&[(0.1, c(1.0, 0.0)), (0.6, c(1.0, 1.0))]).unwrap();
    let mut cfg = RecoveryConfig::new(2, 1);
    cfg.rank_rel_tol = 1e-6;
    let clean = inst.measure(&model, 15).unwrap();
    for (sigma, tol) in [(1e-10, 1e-9), (1e-8, 1e-7)] {
        let y = add_noise(&clean, Noise { sigma, seed: 3 }).unwrap();
        let rec = run_recovery(&y, &inst, &cfg).unwrap();
        assert_eq!(rec.model.len(), 2);
        for (got, want) in rec.model.modes.iter().zip(&model.modes) {
            assert!(circle_distance(got.gamma, want.gamma) < tol, "sigma {sigma}");
        }
    }
}

#[test]
fn classic_close_pair_is_resolved() {
    let inst = ClassicInstance::default();
    let model = classic_model(&[(0.3, c(1.0, 0.0)), (0.302, c(1.0, 0.0))]).unwrap();
    let cfg = RecoveryConfig::new(2, 1);
    let y = inst.measure(&model, cfg.required_l()).unwrap();
    let rec = run_recovery(&y, &inst, &cfg).unwrap();
    assert_eq!(rec.model.len(), 2);
    for (got, want) in rec.model.modes.iter().zip(&model.modes) {
        assert!(circle_distance(got.gamma, want.gamma) < 1e-10);
    }
}

#[test]
fn confluent_recovers_polynomial_amplitudes() {
    let modes = vec![
        PolynomialMode {
            gamma: Frequency::new(0.15).unwrap(),
            q_coeffs: vec![c(1.0, 0.0), c(0.0, -0.5), c(0.25, 0.0)],
        },
        PolynomialMode { gamma: Frequency::new(0.55).unwrap(), q_coeffs: vec![c(2.0, 1.0)] },
    ];
    let inst = ConfluentInstance::new(2);
    let cfg = RecoveryConfig::new(2, 3);
    let y = inst.measure(&modes, cfg.required_l()).unwrap();
    let ann = minimal_annihilator(&y, &cfg).unwrap();
    let mults: Vec<usize> = ann.r_min.iter().map(|r| r.multiplicity).collect();
    assert_eq!(mults.iter().sum::<usize>(), 4);
    assert!(mults.contains(&3) && mults.contains(&1), "{mults:?}");

    let rec = run_recovery(&y, &inst, &cfg).unwrap();
    assert!(rec.is_clean(), "{:?}", rec.warnings);
    let want = confluent_model(&modes);
    for (got, want) in rec.model.modes.iter().zip(&want.modes) {
        assert!(circle_distance(got.gamma, want.gamma) < 1e-10);
    }

    let freqs: Vec<Frequency> = modes.iter().map(|m| m.gamma).collect();
    let samples: Vec<C64> = (0..=y.l_max()).map(|l| y.get(l, 0)).collect();
    let back = recover_polynomials(&freqs, &samples, 2, 1e-10).unwrap();
    assert!(back.warnings.is_empty() && back.residual < 1e-12);
    for (got, want) in back.modes.iter().zip(&modes) {
        for (a, b) in got.q_coeffs.iter().zip(&want.q_coeffs) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}

#[test]
fn dynamical_jordan_block() {
    let lam = c(-0.1, 0.8);
    let mu = c(0.0, -1.5);
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let a = ComplexMatrix::from_rows(&[vec![lam, one, z], vec![z, lam, z], vec![z, z, mu]]).unwrap();
    let basis = GeneralizedEigenbasis::new(vec![
        EigenChain { lambda: lam, chain: vec![vec![one, z, z], vec![z, one, z]] },
        EigenChain { lambda: mu, chain: vec![vec![z, z, one]] },
    ]);
    let problem = DynamicalProblem::new(a, basis, fourier_basis(3), vec![0, 1], 0.7).unwrap();
    assert!(check_observability(&problem));
    let inst = DynamicalInstance::new(problem.clone()).unwrap();
    assert_eq!(inst.mode_dimension(), 2);

    let model = SparseSignalModel::new(vec![
        Mode { gamma: lam, coeffs: vec![c(1.0, 0.5), c(-0.5, 1.0)] },
        Mode { gamma: mu, coeffs: vec![c(0.3, 0.0)] },
    ]);
    let cfg = RecoveryConfig::new(2, 2);
    let y = inst.measure(&model, cfg.required_l()).unwrap();
    let ann = minimal_annihilator(&y, &cfg).unwrap();
    let big = ann.r_min.iter().find(|r| (r.value - (lam * 0.7).exp()).norm() < 1e-8).expect("root at e^(beta lambda)");
    assert_eq!(big.multiplicity, 2);

    let rec = run_recovery(&y, &inst, &cfg).unwrap();
    assert!(rec.is_clean(), "{:?}", rec.warnings);
    assert_eq!(rec.model.len(), 2);
    for want in &model.modes {
        let got = rec.model.modes.iter().find(|m| (m.gamma - want.gamma).norm() < 1e-8).expect("eigenvalue found");
        for (a, b) in got.coeffs.iter().zip(&want.coeffs) {
            assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }

    let x0_only_top = SparseSignalModel::new(vec![Mode { gamma: lam, coeffs: vec![c(1.0, 0.0), z] }]);
    let y = inst.measure(&x0_only_top, cfg.required_l()).unwrap();
    let ann = minimal_annihilator(&y, &cfg).unwrap();
    assert_eq!(ann.r_min.len(), 1);
    assert_eq!(ann.r_min[0].multiplicity, 1);
}

#[test]
fn dynamical_random_cases() {
    let mut rng = rng(17);
    for _ in 0..5 {
        let case = dynamical_case(&mut rng, 8, 3, 8);
        let inst = DynamicalInstance::new(case.problem).unwrap();
        let cfg = RecoveryConfig::new(3, 1);
        let y = inst.measure(&case.model, cfg.required_l()).unwrap();
        let rec = run_recovery(&y, &inst, &cfg).unwrap();
        assert_eq!(rec.model.len(), case.model.len());
        for want in &case.model.modes {
            assert!(rec.model.modes.iter().any(|m| (m.gamma - want.gamma).norm() < 1e-8));
        }
    }
}

#[test]
fn unobservable_index_set_is_detected() {
    let lambdas = [c(0.0, 0.5), c(0.0, 1.0), c(0.0, 1.5)];
    let vectors = standard_basis(3);
    let problem = DynamicalProblem::new(
        ComplexMatrix::diagonal(&lambdas),
        GeneralizedEigenbasis::diagonal(&lambdas, &vectors),
        standard_basis(3),
        vec![0],
        1.0,
    )
    .unwrap();
    assert!(!check_observability(&problem));
}

#[test]
fn channel_round_trip_and_ghost_resolution() {
    let model = ChannelModel::new(vec![
        ChannelPath { gamma: TfShift::new(0.31, 0.77), c: c(0.8, -0.1) },
        ChannelPath { gamma: TfShift::new(0.9, 0.12), c: c(-0.2, 1.4) },
        ChannelPath { gamma: TfShift::new(0.05, 0.4), c: c(1.1, 0.6) },
    ])
    .unwrap();
    let inst = ChannelInstance::default();
    let cfg = RecoveryConfig::new(3, 1);
    let y = inst.measure(&model, cfg.required_l()).unwrap();
    let rec = run_recovery(&y, &inst, &cfg).unwrap();
    assert!(rec.is_clean());
    for p in &model.paths {
        assert!(rec.model.modes.iter().any(|m| torus_distance(m.gamma, p.gamma) < 1e-9));
    }

    let runs_for = |probes: Vec<TfShift>| -> Vec<(ChannelInstance, MeasurementRecord)> {
        [TfShift::new(1.0, 0.0), TfShift::new(0.0, -1.0)]
            .into_iter()
            .map(|g| {
                let setup = ChannelProbeSetup::new(probes.clone(), ShiftCombination::single(g)).unwrap();
                let inst = ChannelInstance::new(setup).unwrap();
                let y = inst.measure(&model, cfg.required_l()).unwrap();
                (inst, y)
            })
            .collect()
    };
    // three paths give nine candidates; two probes leave the joint fit one short
    let few = recover_multi(&runs_for(vec![TfShift::ORIGIN, TfShift::new(0.5, -0.25)]), &cfg).unwrap();
    assert!(few.warnings.iter().any(|w| matches!(w, Warning::NonUniqueCoefficients { .. })));
    let runs = runs_for(vec![TfShift::ORIGIN, TfShift::new(0.5, -0.25), TfShift::new(-0.3, 0.6)]);
    let multi = recover_multi(&runs, &cfg).unwrap();
    assert_eq!(multi.candidates.len(), 9);
    assert_eq!(multi.model.paths.len(), 3, "{:?}", multi.model);
    for p in &model.paths {
        let got = multi.model.paths.iter().find(|q| torus_distance(q.gamma, p.gamma) < 1e-8).expect("path found");
        assert!((got.c - p.c).norm() < 1e-7);
    }
}

#[test]
fn problem_files_round_trip_through_recovery() {
    let text = r#"{
        "kind": "channel",
        "config": {"kappa": 2},
        "setup": {},
        "noise": {"sigma": 0.0, "seed": 1},
        "truth": {"modes": [
            {"gamma": [0.2, 0.3], "coeffs": [[1, 0]]},
            {"gamma": [0.65, 0.8], "coeffs": [[0, 0.7]]}
        ]}
    }"#;
    let p = Problem::from_json(text).unwrap().with_measurements().unwrap();
    let report = p.recover(Default::default()).unwrap();
    assert!(report.is_clean());
    let cmp = report.truth_comparison().unwrap();
    assert!(cmp.support_matched && cmp.max_point_error.unwrap() < 1e-9);
    let json = report.to_json();
    let again: Report = serde_json::from_str(&json).unwrap();
    assert_eq!(again, report);
    assert_eq!(again.to_json(), json);
}

#[test]
fn synthesize_agrees_with_instance_measure() {
    let model = classic_model(&[(0.2, c(1.0, 0.0))]).unwrap();
    let inst = ClassicInstance::default();
    let req = SynthesisRequest {
        truth: InstanceTruth::Classic { instance: inst.clone(), model: model.clone() },
        l_max: 5,
        noise: None,
    };
    assert_eq!(synthesize(&req).unwrap(), inst.measure(&model, 5).unwrap());
}
