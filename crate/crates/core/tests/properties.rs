//! Property tests over randomly drawn instances.

use std::f64::consts::TAU;

use prony::channel::{channel_symbol, gaussian_cross_term, goodh_inverse, torus_distance};
use prony::classic::{circle_distance, classic_model};
use prony::numerics::{numerical_rank, polynomial_roots, ROOT_EVAL_TOL};
use prony::oracle::{quadrature_inner_product, synthesize, InstanceTruth, SynthesisRequest};
use prony::*;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn unit_coeff() -> impl Strategy<Value = C64> {
    (0.2..3.0f64, 0.0..TAU).prop_map(|(r, p)| C64::from_polar(r, p))
}

/// Up to four frequencies with circle separation at least 0.05.
fn spread_frequencies() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 1..=4).prop_filter("separated", |f| {
        f.iter().enumerate().all(|(i, a)| {
            f[i + 1..].iter().all(|b| {
                let d = (a - b).abs();
                d.min(1.0 - d) >= 0.05
            })
        })
    })
}

fn classic_truth(freqs: &[f64], coeffs: &[C64]) -> SparseSignalModel<Frequency> {
    let modes: Vec<(f64, C64)> = freqs.iter().copied().zip(coeffs.iter().copied()).collect();
    classic_model(&modes).unwrap()
}

fn measure(model: &SparseSignalModel<Frequency>, l: usize) -> MeasurementRecord {
    let req = SynthesisRequest {
        truth: InstanceTruth::Classic { instance: Default::default(), model: model.clone() },
        l_max: l,
        noise: None,
    };
    synthesize(&req).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthesis_is_linear(
        freqs in spread_frequencies(),
        a in prop::collection::vec(unit_coeff(), 4),
        b in prop::collection::vec(unit_coeff(), 4),
        alpha in complex(),
    ) {
        let l = 7;
        let ya = measure(&classic_truth(&freqs, &a), l);
        let yb = measure(&classic_truth(&freqs, &b), l);
        let mixed: Vec<C64> = a.iter().zip(&b).map(|(x, y)| alpha * x + y).collect();
        let yab = measure(&classic_truth(&freqs, &mixed), l);
        let want = ya.scale(alpha).add(&yb).unwrap();
        let scale = 1.0 + want.max_modulus();
        prop_assert!(yab.values().max_abs_diff(want.values()) < 1e-12 * scale);
    }

    #[test]
    fn classic_round_trip(freqs in spread_frequencies(), coeffs in prop::collection::vec(unit_coeff(), 4)) {
        let model = classic_truth(&freqs, &coeffs);
        let cfg = RecoveryConfig::new(freqs.len(), 1);
        let y = measure(&model, cfg.required_l());
        let rec = run_recovery(&y, &ClassicInstance::default(), &cfg).unwrap();
        prop_assert!(rec.is_clean(), "{:?}", rec.warnings);
        prop_assert_eq!(rec.model.len(), model.len());
        prop_assert_eq!(rec.annihilator.hankel_rank, model.len());
        for t in &model.modes {
            let got = rec.model.modes.iter().min_by(|p, q| {
                circle_distance(p.gamma, t.gamma).total_cmp(&circle_distance(q.gamma, t.gamma))
            }).unwrap();
            prop_assert!(circle_distance(got.gamma, t.gamma) < 1e-9);
            prop_assert!((got.coeffs[0] - t.coeffs[0]).norm() < 1e-7);
        }
    }

    #[test]
    fn larger_kappa_bound_changes_nothing(freqs in spread_frequencies(), coeffs in prop::collection::vec(unit_coeff(), 4)) {
        let model = classic_truth(&freqs, &coeffs);
        let cfg = RecoveryConfig::new(freqs.len() + 2, 1);
        let y = measure(&model, cfg.required_l());
        let rec = run_recovery(&y, &ClassicInstance::default(), &cfg).unwrap();
        prop_assert_eq!(rec.model.len(), model.len());
        prop_assert!(!rec.annihilator.rank_saturated);
    }

    #[test]
    fn rank_ignores_scaling(
        entries in prop::collection::vec(complex(), 12),
        s in complex().prop_filter("nonzero", |z| z.norm() > 1e-3),
    ) {
        let m = ComplexMatrix::from_row_major(4, 3, entries).unwrap();
        let r = numerical_rank(&m, 1e-10).unwrap();
        prop_assert_eq!(r, numerical_rank(&m.scale(s), 1e-10).unwrap());
    }

    #[test]
    fn roots_satisfy_residual_bound(coeffs in prop::collection::vec(complex(), 2..8)) {
        let mut c = coeffs;
        c.push(C64::new(1.0, 0.0));
        let p = ComplexPolynomial::new(c).unwrap();
        let bound = p.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let roots = polynomial_roots(&p).unwrap();
        prop_assert_eq!(roots.len(), p.degree());
        for z in roots {
            prop_assert!(p.eval(z).norm() <= ROOT_EVAL_TOL * bound * z.norm().max(1.0).powi(p.degree() as i32));
        }
    }

    #[test]
    fn goodh_inverse_is_a_left_inverse(t in 0.0..1.0f64, nu in 0.0..1.0f64) {
        let g = TfShift::new(t, nu);
        let back = goodh_inverse(channel_symbol(g, &ChannelProbeSetup::default())).unwrap();
        prop_assert!(torus_distance(g, back) < 1e-9);
    }

    #[test]
    fn report_json_is_lossless(freqs in spread_frequencies(), coeffs in prop::collection::vec(unit_coeff(), 4)) {
        let model = classic_truth(&freqs, &coeffs);
        let cfg = RecoveryConfig::new(freqs.len(), 1);
        let y = measure(&model, cfg.required_l());
        let rec = run_recovery(&y, &ClassicInstance::default(), &cfg).unwrap();
        let text = serde_json::to_string(&rec.model).unwrap();
        let back: SparseSignalModel<Frequency> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, rec.model);
        let text = serde_json::to_string(&rec.annihilator).unwrap();
        let back: AnnihilatorResult = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, rec.annihilator);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cross_term_matches_quadrature(
        t in -2.0..2.0f64, nu in -2.0..2.0f64, st in -2.0..2.0f64, snu in -2.0..2.0f64,
    ) {
        let (g, s) = (TfShift::new(t, nu), TfShift::new(st, snu));
        prop_assert!((gaussian_cross_term(g, s) - quadrature_inner_product(g, s)).norm() < 1e-10);
    }
}
