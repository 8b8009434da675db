use dobkit::loops::make_inner_loop;
use dobkit::stability::{
    bisect_boundary, classify_poles, constraint_check, position_non_oscillation_bound, root_locus,
    sweep_values, BindingConstraint, SweepParam,
};
use dobkit::{DobConfig, MeasurementKind, OuterGains, PlantParams};
use proptest::prelude::*;

fn config(kind: MeasurementKind, alpha: f64, g: f64, g_v: f64, ts: f64) -> DobConfig {
    let plant = PlantParams::exact(0.003, 0.25).unwrap().with_alpha(alpha).unwrap();
    DobConfig::new(kind, plant, g, Some(g_v), ts).unwrap()
}

fn inner_class(cfg: &DobConfig) -> dobkit::stability::PoleClass {
    classify_poles(&make_inner_loop(cfg).unwrap().t).unwrap()
}

/// Keep `alpha g Ts` away from the closed-form boundaries so the root-based
/// classification is not decided by rounding.
fn clear_of_boundaries(cfg: &DobConfig) -> bool {
    let ag = cfg.alpha_g();
    let mut bounds = vec![2.0 / cfg.ts, 1.0 / cfg.ts];
    if let Some(g_v) = cfg.g_v {
        bounds.push(position_non_oscillation_bound(g_v, cfg.ts));
    }
    bounds.iter().all(|b| (ag - b).abs() > 1e-6 * b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_forms_agree_with_roots(
        position in any::<bool>(), alpha in 0.1..5.0_f64, ag_ts in 0.01..3.0_f64,
        g_v_ts in 0.05..5.0_f64, fast in any::<bool>(),
    ) {
        let ts = if fast { 5e-4 } else { 1e-3 };
        let kind = if position { MeasurementKind::Position } else { MeasurementKind::Velocity };
        let cfg = config(kind, alpha, ag_ts / ts / alpha, g_v_ts / ts, ts);
        prop_assume!(clear_of_boundaries(&cfg));
        let verdict = constraint_check(&cfg);
        let poles = inner_class(&cfg);
        prop_assert_eq!(verdict.stable, poles.all_in_unit, "{:?} {:?}", verdict, poles);
        prop_assert_eq!(verdict.non_oscillatory, poles.all_real_in_0_1, "{:?} {:?}", verdict, poles);
        // non-oscillatory implies stable
        prop_assert!(!verdict.non_oscillatory || verdict.stable);
    }

    #[test]
    fn acceleration_inner_loop_is_always_stable(
        alpha in 0.01..100.0_f64, g in 1.0..1e6_f64, fast in any::<bool>(),
    ) {
        let ts = if fast { 5e-4 } else { 1e-3 };
        let cfg = config(MeasurementKind::Acceleration, alpha, g, 1.0, ts);
        let v = constraint_check(&cfg);
        prop_assert!(v.stable && v.non_oscillatory);
        let p = inner_class(&cfg);
        prop_assert!(p.all_in_unit && p.all_real_in_0_1, "{p:?}");
    }
}

/// Root-based boundary in `alpha g_DOB`, by bisection.
fn root_boundary(kind: MeasurementKind, g_v: f64, ts: f64, lo: f64, hi: f64, oscillation: bool) -> f64 {
    bisect_boundary(lo, hi, 1e-9, |ag| {
        let p = inner_class(&config(kind, 1.0, ag, g_v, ts));
        Ok(if oscillation { p.all_real_in_0_1 } else { p.all_in_unit })
    })
    .unwrap()
}

#[test]
fn boundaries_are_sharp() {
    let ts = 1e-3;
    let two = root_boundary(MeasurementKind::Velocity, 1.0, ts, 1000.0, 3000.0, false);
    assert!((two - 2.0 / ts).abs() < 1e-4 * 2.0 / ts, "{two}");
    let one = root_boundary(MeasurementKind::Velocity, 1.0, ts, 500.0, 1500.0, true);
    assert!((one - 1.0 / ts).abs() < 1e-4 / ts, "{one}");

    let bound = position_non_oscillation_bound(750.0, ts);
    let pos = root_boundary(MeasurementKind::Position, 750.0, ts, 50.0, 500.0, true);
    assert!((pos - bound).abs() < 1e-3 * bound, "{pos} vs {bound}");
    let pos_stable = root_boundary(MeasurementKind::Position, 750.0, ts, 500.0, 3000.0, false);
    assert!((pos_stable - 2.0 / ts).abs() < 1e-4 * 2.0 / ts, "{pos_stable}");
}

#[test]
fn verdict_examples() {
    let v = constraint_check(&config(MeasurementKind::Velocity, 1.0, 999.0, 1.0, 1e-3));
    assert!(v.stable && v.non_oscillatory);
    assert_eq!(v.binding_constraint, BindingConstraint::VelocityNonOscillation);
    let v = constraint_check(&config(MeasurementKind::Velocity, 1.0, 2001.0, 1.0, 1e-3));
    assert!(!v.stable);
    assert_eq!(v.binding_constraint, BindingConstraint::TwoOverTs);
    // alpha g = 2/Ts exactly is marginal, not stable
    let v = constraint_check(&config(MeasurementKind::Velocity, 4.0, 1000.0, 2000.0, 5e-4));
    assert!(!v.stable);
    assert_eq!(v.margin, 0.0);
}

fn reference_gains() -> OuterGains {
    OuterGains::new(5000.0, 25.0).unwrap()
}

#[test]
fn locus_is_continuous_with_constant_pole_count() {
    let base = config(MeasurementKind::Velocity, 1.0, 500.0, 1000.0, 1e-3);
    let values = sweep_values(0.2, 4.5, 200, false);
    let locus = root_locus(&base, &reference_gains(), SweepParam::Alpha, &values).unwrap();
    let n = locus.poles[0].len();
    assert!(locus.poles.iter().all(|p| p.len() == n));
    for w in locus.poles.windows(2) {
        let jump = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).norm()).fold(0.0_f64, f64::max);
        assert!(jump < 0.1, "branch jump {jump}");
    }
    let exit = locus.exit_value.expect("the sweep crosses the unit circle");
    assert!(exit > 1.0 && exit < 4.5, "{exit}");
}

#[test]
fn low_alpha_velocity_locus_over_g_has_an_exit() {
    let base = config(MeasurementKind::Velocity, 0.001, 1e5, 1000.0, 1e-3);
    let values = sweep_values(1e5, 1e7, 120, true);
    let locus = root_locus(&base, &reference_gains(), SweepParam::GDob, &values).unwrap();
    let exit = locus.exit_value.expect("exit along g_DOB");
    // the inner loop alone leaves at alpha g = 2/Ts
    assert!(exit <= 2.0 / 1e-3 / 0.001 * (1.0 + 1e-6), "{exit}");
    assert!(exit > 1e6, "{exit}");
}
