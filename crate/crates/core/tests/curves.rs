use proptest::prelude::*;
use termfit::curve::{discrete_forward, spot_rate};
use termfit::optim::sample_feasible;
use termfit::testkit::adaptive_simpson;
use termfit::{constraint_system, is_feasible, CurveParams, ModelKind, RngStream};

fn feasible(model: ModelKind, seed: u64) -> CurveParams {
    let cs = constraint_system(model);
    let theta = sample_feasible(&cs, &mut RngStream::new(seed)).unwrap();
    CurveParams::from_slice(model, &theta).unwrap()
}

proptest! {
    #[test]
    fn svensson_without_hump_is_nelson_siegel(
        b0 in 0.001f64..0.25, b1 in -0.2f64..0.2, b2 in 0.0f64..0.25,
        l1 in 0.004f64..12.0, l2 in 0.004f64..12.0, t in 0.0f64..40.0,
    ) {
        let ns = CurveParams::nelson_siegel(b0, b1, b2, l1).unwrap();
        let sv = CurveParams::svensson(b0, b1, b2, l1, 0.0, l2).unwrap();
        prop_assert_eq!(ns.spot_rate(t).unwrap(), sv.spot_rate(t).unwrap());
        prop_assert_eq!(ns.forward_rate(t).unwrap(), sv.forward_rate(t).unwrap());
    }

    #[test]
    fn spot_is_average_forward(seed in any::<u64>(), t in 0.05f64..30.0, sv in any::<bool>()) {
        let model = if sv { ModelKind::Svensson } else { ModelKind::NelsonSiegel };
        let p = feasible(model, seed);
        let avg = adaptive_simpson(&|s| p.forward_rate(s).unwrap(), 0.0, t, 1e-13) / t;
        prop_assert!((p.spot_rate(t).unwrap() - avg).abs() < 1e-9);
    }

    #[test]
    fn sampled_points_are_feasible(seed in any::<u64>(), sv in any::<bool>()) {
        let model = if sv { ModelKind::Svensson } else { ModelKind::NelsonSiegel };
        let verdict = is_feasible(&feasible(model, seed), &constraint_system(model)).unwrap();
        prop_assert!(verdict.feasible, "{:?}", verdict.violations);
    }

    #[test]
    fn repair_restores_feasibility(raw in proptest::collection::vec(-1.0f64..13.0, 6)) {
        let cs = constraint_system(ModelKind::Svensson);
        let mut theta = raw.clone();
        prop_assert!(cs.repair(&mut theta));
        prop_assert!(cs.is_strictly_feasible(&theta));
    }
}

#[test]
fn limits() {
    let p = CurveParams::svensson(0.09, -0.04, 0.03, 0.7, 0.02, 0.2).unwrap();
    assert!((p.spot_rate(0.0).unwrap() - 0.05).abs() < 1e-15);
    assert!((p.forward_rate(0.0).unwrap() - 0.05).abs() < 1e-15);
    assert!((p.spot_rate(1e4).unwrap() - 0.09).abs() < 1e-4);
}

#[test]
fn discrete_forward_matches_instantaneous_in_the_limit() {
    let p = CurveParams::nelson_siegel(0.08, -0.02, 0.05, 0.4).unwrap();
    let (s, t) = (3.0, 3.0 + 1e-6);
    let f = discrete_forward(spot_rate(&p, t).unwrap(), t, spot_rate(&p, s).unwrap(), s).unwrap();
    assert!((f - p.forward_rate(s).unwrap()).abs() < 1e-7);
    assert!(discrete_forward(0.05, 1.0, 0.05, 2.0).is_err());
}

#[test]
fn constraint_counts_and_labels() {
    let ns = constraint_system(ModelKind::NelsonSiegel);
    let sv = constraint_system(ModelKind::Svensson);
    assert_eq!(ns.inequality_count(), 9);
    assert_eq!(sv.inequality_count(), 13);
    let bad = CurveParams::nelson_siegel(0.05, -0.08, 0.01, 1.0).unwrap();
    let verdict = is_feasible(&bad, &ns).unwrap();
    assert!(!verdict.feasible);
    assert_eq!(verdict.violations, vec!["β₀ + β₁ > 0".to_string()]);
}
