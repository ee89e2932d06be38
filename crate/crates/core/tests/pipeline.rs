use hullstate::bench::{
    self, prepare, run_interval_once, run_wls_campaign, NoiseOverride, Report, Scenario,
};
use hullstate::cases;
use hullstate::estimator::{self, build_linear_model, to_rectangular};
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn interval_error_within_worst_wls_trial() {
    let sc = Scenario::bundled(cases::IEEE34)
        .with_trials(200)
        .with_seed(1);
    let wls = run_wls_campaign(&sc).unwrap();
    for seed in 1..=5 {
        let iv = run_interval_once(&sc.clone().with_seed(seed)).unwrap();
        assert!(
            iv.mae.real <= wls.mae.real,
            "seed {seed}: {} > {}",
            iv.mae.real,
            wls.mae.real
        );
    }
}

#[test]
fn zero_noise_error_is_linearization_loss() {
    for case in [cases::SIX_BUS, cases::IEEE34] {
        let prep = prepare(&Scenario::bundled(case).with_noise(NoiseOverride::zero())).unwrap();
        let ms = prep.measurements(0);
        let sys = to_rectangular(&build_linear_model(&prep.network, &ms).unwrap(), &ms).unwrap();
        let qr = sys.a.clone().qr();
        let x = qr
            .r()
            .solve_upper_triangular(&(qr.q().transpose() * &sys.b))
            .unwrap();
        let est = estimator::estimate(&prep.network, &ms).unwrap();
        let got = DVector::from_vec(est.state.stacked());
        assert!((&got - &x).amax() < 1e-9, "{}", (&got - &x).amax());
        let truth = DVector::from_vec(prep.truth_state().stacked());
        let loss = (&x - &truth).amax();
        assert!(loss > 0.0 && loss < 1e-2, "{}: {loss}", case.name);
    }
}

#[test]
fn metrics_repeat_exactly() {
    let sc = Scenario::bundled(cases::IEEE34_R1221)
        .with_trials(20)
        .with_seed(9);
    let strip =
        |r: bench::ComparisonReport| (r.wls.per_bus_rmse, r.wls.mae, r.interval.per_bus_abs_error);
    let a = strip(bench::compare(&sc).unwrap());
    let b = strip(bench::compare(&sc).unwrap());
    assert_eq!(a, b);
}

#[test]
fn emitted_json_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rep.json");
    let rep = bench::run(&Scenario::bundled(cases::TWO_BUS).with_trials(4)).unwrap();
    bench::emit_report(&rep, bench::Format::Json, &path).unwrap();
    let back = Report::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn thread_count_does_not_change_metrics() {
    let sc = Scenario::bundled(cases::SIX_BUS)
        .with_trials(30)
        .with_seed(2);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| run_wls_campaign(&sc).unwrap());
    let b = four.install(|| run_wls_campaign(&sc).unwrap());
    assert_eq!(a.per_bus_rmse, b.per_bus_rmse);
    assert_eq!(a.mae, b.mae);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn six_bus_estimates_contract_and_stay_small(seed in 0u64..10_000) {
        let prep = prepare(&Scenario::bundled(cases::SIX_BUS)).unwrap();
        let est = estimator::estimate(&prep.network, &prep.measurements(seed)).unwrap();
        prop_assert!(est.enclosure.beta < 1.0);
        prop_assert_eq!(est.enclosure.nested_checks, est.enclosure.iterations);
        let (er, ex) = est.state.max_abs_error(&prep.truth_state());
        prop_assert!(er < 0.05 && ex < 0.05);
        // the returned state is the midpoint of the box
        for (k, iv) in est.enclosure.states().iter().enumerate() {
            let v = est.state.stacked()[k];
            prop_assert!((iv.mid() - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn campaign_rmse_never_exceeds_worst_trial(seed in 0u64..10_000, trials in 1usize..12) {
        let sc = Scenario::bundled(cases::SIX_BUS).with_trials(trials).with_seed(seed);
        let rep = run_wls_campaign(&sc).unwrap();
        let rmse = rep.max_rmse.unwrap();
        prop_assert!(rmse.real <= rep.mae.real + 1e-15 && rmse.imag <= rep.mae.imag + 1e-15);
        prop_assert_eq!(rep.seeds.len(), trials);
    }
}
