use chrono::NaiveDate;
use termfit::objective::observation_weight;
use termfit::optim::sample_feasible;
use termfit::optim::Objective;
use termfit::testkit::{generate_instance, oracle_price, oracle_wsse, reference_params};
use termfit::{
    build_schedule, constraint_system, price, BondObservation, BondSpec, CurveParams, DayCount, ModelKind,
    ObjectiveSpec, RngStream,
};

fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn random_case(model: ModelKind, seed: u64) -> (CurveParams, ObjectiveSpec) {
    let cs = constraint_system(model);
    let mut rng = RngStream::new(seed);
    let truth = CurveParams::from_slice(model, &sample_feasible(&cs, &mut rng).unwrap()).unwrap();
    let inst = generate_instance(&truth, seed, 0.1).unwrap();
    let probe = CurveParams::from_slice(model, &sample_feasible(&cs, &mut rng).unwrap()).unwrap();
    (probe, inst.objective(model).unwrap())
}

#[test]
fn weighted_sse_matches_oracle() {
    for seed in 0..200 {
        let model = if seed % 2 == 0 {
            ModelKind::NelsonSiegel
        } else {
            ModelKind::Svensson
        };
        let (p, spec) = random_case(model, seed);
        let fast = spec.weighted_sse(&p).unwrap();
        let slow = oracle_wsse(&p, spec.observations());
        assert!(
            (fast - slow).abs() / (1.0 + slow.abs()) < 1e-12,
            "{seed}: {fast} vs {slow}"
        );
    }
}

#[test]
fn pricing_matches_oracle() {
    let bond = BondSpec::fixed_coupon("B", date("2012-05-01"), date("2029-11-01"), 0.0725, 2, 100.0);
    let schedule = build_schedule(&bond, date("2015-03-17"), DayCount::Actual365Fixed).unwrap();
    let cs = constraint_system(ModelKind::Svensson);
    let mut rng = RngStream::new(1);
    for _ in 0..200 {
        let p = CurveParams::from_slice(ModelKind::Svensson, &sample_feasible(&cs, &mut rng).unwrap()).unwrap();
        let a = price(&schedule, &p);
        let b = oracle_price(&p, schedule.flows());
        assert!((a - b).abs() / b < 1e-12);
    }
}

#[test]
fn two_bond_micro_instance() {
    let p = CurveParams::nelson_siegel(0.05, 0.0, 0.0, 1.0).unwrap();
    let valuation = date("2015-03-17");
    let obs = |id: &str, years: i32, resid: f64, spread: f64, nd: u32| {
        let bond = BondSpec::zero_coupon(id, date("2014-03-17"), date(&format!("{}-03-17", 2015 + years)), 100.0);
        let schedule = build_schedule(&bond, valuation, DayCount::Actual365Fixed).unwrap();
        let exact = price(&schedule, &p);
        BondObservation {
            bond,
            schedule,
            observed_dirty_price: exact + resid,
            staleness_days: nd,
            spread,
        }
    };
    // weights 1/(0.25·2) = 2 and 1/(1·1) = 1
    let observations = vec![
        obs("A", 1, 2.0, 0.25, 1),
        obs("B", 2, 1.0, 1.0, 0),
        obs("C", 3, 0.0, 0.5, 0),
        obs("D", 4, 0.0, 0.5, 0),
        obs("E", 5, 0.0, 0.5, 0),
    ];
    assert_eq!(observation_weight(0.25, 1).unwrap(), 2.0);
    let spec = ObjectiveSpec::new(ModelKind::NelsonSiegel, observations).unwrap();
    assert!((spec.weighted_sse(&p).unwrap() - 9.0).abs() < 1e-9);
    assert!((oracle_wsse(&p, spec.observations()) - 9.0).abs() < 1e-9);
}

#[test]
fn gradient_matches_central_differences() {
    for model in [ModelKind::NelsonSiegel, ModelKind::Svensson] {
        let inst = generate_instance(&reference_params(model), 17, 0.05).unwrap();
        let spec = inst.objective(model).unwrap();
        let cs = constraint_system(model);
        let mut rng = RngStream::new(23);
        for _ in 0..50 {
            let x = sample_feasible(&cs, &mut rng).unwrap();
            let mut g = vec![0.0; x.len()];
            spec.value_and_gradient(&x, &mut g).unwrap();
            let mut fd = vec![0.0; x.len()];
            for i in 0..x.len() {
                let h = 1e-6 * x[i].abs().max(1e-2);
                let (mut a, mut b) = (x.clone(), x.clone());
                a[i] += h;
                b[i] -= h;
                fd[i] = (spec.value(&a) - spec.value(&b)) / (2.0 * h);
            }
            let err = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(err / norm < 1e-5, "{model}: {g:?} vs {fd:?}");
        }
    }
}

#[test]
fn goodness_of_fit_is_zero_at_truth() {
    let p = reference_params(ModelKind::NelsonSiegel);
    let spec = generate_instance(&p, 2, 0.0)
        .unwrap()
        .objective(ModelKind::NelsonSiegel)
        .unwrap();
    assert!(spec.goodness_of_fit(&p).unwrap() < 1e-10);
    let off = CurveParams::nelson_siegel(0.09, -0.03, 0.04, 0.6).unwrap();
    assert!(spec.goodness_of_fit(&off).unwrap() > 0.1);
}
