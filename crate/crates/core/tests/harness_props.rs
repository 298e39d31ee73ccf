use cutiga::assembly::{MethodParams, Variant};
use cutiga::harness::{
    convergence_rates, run_condition_study, run_convergence_cut_square, run_fixed_method_eigen_study,
    run_worst_case_circle, shifts, FixedMethodConfig,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn rates_recover_power_laws(c in 1e-3f64..1e3, r in 0.5f64..5.0, h0 in 0.05f64..0.5, k in 2usize..6) {
        let hs: Vec<f64> = (0..k).map(|i| h0 / 2f64.powi(i as i32)).collect();
        let errs: Vec<f64> = hs.iter().map(|h| c * h.powf(r)).collect();
        for rate in convergence_rates(&hs, &errs) {
            prop_assert!((rate - r).abs() < 1e-10);
        }
    }

    #[test]
    fn shifts_are_uniform_in_unit_interval(n in 1usize..300) {
        let t = shifts(n);
        prop_assert_eq!(t.len(), n);
        prop_assert!(t.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!(t.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn worst_case_summary_is_the_shift_maximum() {
    let params = MethodParams::new(1.0, 0.1, Variant::LsStabilized);
    let hs = [0.26, 0.13];
    let s = run_worst_case_circle(&params, &hs, 5);
    assert_eq!(s.failures(), 0);
    assert_eq!(s.records.len(), 10);
    assert_eq!(s.summary.len(), 2);
    for row in &s.summary {
        let max_l2 = s
            .records
            .iter()
            .filter(|r| r.h == row.h)
            .map(|r| r.l2_error.unwrap())
            .fold(0.0, f64::max);
        assert_eq!(row.l2_error, Some(max_l2));
    }
    assert_eq!(s.rates.len(), 1);
    assert!(s.rates[0].l2_rate > 2.0);

    let again = run_worst_case_circle(&params, &hs, 5);
    let strip = |v: &[cutiga::harness::RunRecord]| v.iter().map(|r| r.without_timing()).collect::<Vec<_>>();
    assert_eq!(strip(&s.records), strip(&again.records));
}

#[test]
fn cut_square_converges() {
    for variant in [Variant::LsStabilized, Variant::StandardNitsche] {
        let params = MethodParams::new(1.0, 0.1, variant);
        let s = run_convergence_cut_square(&params, &[8, 16, 32], 0.5).unwrap();
        assert!(s.rates.iter().all(|r| r.l2_rate > 2.5 && r.energy_rate > 1.7), "{variant}: {:?}", s.rates);
    }
    let params = MethodParams::new(1.0, 0.1, Variant::LsStabilized);
    assert!(run_convergence_cut_square(&params, &[8], 1.0).is_err());
}

#[test]
fn condition_study_after_removal_is_definite() {
    let params = MethodParams::new(1.0, 0.1, Variant::LsStabilized);
    let s = run_condition_study(&params, 0.26, 8).unwrap();
    assert_eq!(s.records.len(), 8);
    for r in &s.records {
        assert!(r.lambda_min_br.unwrap() > 0.0);
        assert!(r.kappa_br.unwrap() >= 1.0 && r.kappa_br.unwrap().is_finite());
        assert!(r.lambda_max_br.unwrap() <= r.lambda_max.unwrap() * (1.0 + 1e-12));
    }
}

#[test]
fn eigen_study_shape() {
    let cfg = FixedMethodConfig {
        base_n: 6,
        levels: 2,
        delta_cuts: vec![0.0, 0.5],
        taus: vec![0.1],
        variants: vec![Variant::LsStabilized],
        ..Default::default()
    };
    let studies = run_fixed_method_eigen_study(&cfg).unwrap();
    assert_eq!(studies.len(), 1);
    let recs = &studies[0].records;
    assert_eq!(recs.len(), 4);
    for r in recs {
        assert!(r.lambda_min.unwrap() > 0.0, "{r:?}");
        assert_eq!(r.h, 1.0 / (6.0 * 2f64.powi(r.refinement.unwrap() as i32) - r.delta_cut.unwrap()));
    }
}
