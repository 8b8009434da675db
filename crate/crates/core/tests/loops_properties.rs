use dobkit::loops::{
    compensator_phase, make_inner_loop, make_position_system, position_plant, q_filter,
    velocity_estimator, velocity_plant,
};
use dobkit::stability::{classify_roots, closed_loop_poles};
use dobkit::{CompensatorPhase, DobConfig, MeasurementKind, OuterGains, PlantParams, RationalTf};
use num_complex::Complex64;
use proptest::prelude::*;

fn config(kind: MeasurementKind, alpha: f64, g: f64, g_v: f64, ts: f64) -> DobConfig {
    let plant = PlantParams::exact(0.003, 0.25).unwrap().with_alpha(alpha).unwrap();
    DobConfig::new(kind, plant, g, Some(g_v), ts).unwrap()
}

fn kind() -> impl Strategy<Value = MeasurementKind> {
    prop_oneof![
        Just(MeasurementKind::Acceleration),
        Just(MeasurementKind::Velocity),
        Just(MeasurementKind::Position),
    ]
}

fn ts() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1e-3), Just(5e-4), Just(1e-4)]
}

fn at_one(tf: &RationalTf) -> f64 {
    tf.eval(Complex64::new(1.0, 0.0)).unwrap().re
}

/// Inner loop reduced from the observer blocks rather than the closed forms:
/// `L = alpha Q/(1-Q)` (acceleration) or `alpha g H` with `H` the map from
/// plant acceleration to the velocity signal fed to the observer, and
/// `C = alpha S / (1 - Q)`.
fn inner_from_blocks(cfg: &DobConfig) -> (RationalTf, RationalTf, RationalTf, RationalTf) {
    let q = q_filter(cfg.g_dob, cfg.ts).unwrap();
    let one_minus_q = q.one_minus();
    let alpha = cfg.alpha();
    let l = match cfg.kind {
        MeasurementKind::Acceleration => q.series(&one_minus_q.recip().unwrap()).unwrap().scale(alpha),
        MeasurementKind::Velocity => velocity_plant(cfg.ts).unwrap().scale(alpha * cfg.g_dob),
        MeasurementKind::Position => velocity_estimator(cfg.g_v.unwrap(), cfg.ts)
            .unwrap()
            .series(&position_plant(cfg.ts).unwrap())
            .unwrap()
            .scale(alpha * cfg.g_dob),
    };
    let s = l.sensitivity().unwrap();
    let t = l.feedback_unity().unwrap();
    let c = s.series(&one_minus_q.recip().unwrap()).unwrap().scale(alpha);
    (l, s, t, c)
}

proptest! {
    #[test]
    fn compensators_have_unit_dc_gain(
        k in kind(), alpha in 0.05..20.0_f64, g in 1.0..5000.0_f64, g_v in 10.0..5000.0_f64, ts in ts(),
    ) {
        let lp = make_inner_loop(&config(k, alpha, g, g_v, ts)).unwrap();
        prop_assert!((at_one(&lp.c) - 1.0).abs() < 1e-10);
        prop_assert!(at_one(&lp.s).abs() < 1e-12);
        prop_assert!((at_one(&lp.t) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn velocity_compensator_leads_exactly_above_threshold(
        alpha in 0.05..5.0_f64, g in 1.0..1500.0_f64, ts in ts(),
    ) {
        let cfg = config(MeasurementKind::Velocity, alpha, g, 1000.0, ts);
        let threshold = 1.0 / (1.0 + g * ts);
        prop_assume!((alpha - threshold).abs() > 1e-9 * threshold);
        let lp = make_inner_loop(&cfg).unwrap();
        let zero = lp.c.zeros().unwrap().roots[0].re;
        let pole = lp.c.poles().unwrap().roots[0].re;
        let lead = alpha > threshold;
        // lead: the zero sits closer to z = 1 than the pole
        prop_assert_eq!(zero > pole, lead);
        let want = if lead { CompensatorPhase::Lead } else { CompensatorPhase::Lag };
        prop_assert_eq!(compensator_phase(&lp.c).unwrap(), want);
    }

    #[test]
    fn acceleration_compensator_leads_iff_alpha_above_one(
        alpha in 0.05..20.0_f64, g in 1.0..5000.0_f64, ts in ts(),
    ) {
        prop_assume!((alpha - 1.0).abs() > 1e-9);
        let lp = make_inner_loop(&config(MeasurementKind::Acceleration, alpha, g, 1.0, ts)).unwrap();
        let want = if alpha > 1.0 { CompensatorPhase::Lead } else { CompensatorPhase::Lag };
        prop_assert_eq!(compensator_phase(&lp.c).unwrap(), want);
    }

    #[test]
    fn closed_forms_match_block_diagrams(
        k in kind(), alpha in 0.05..10.0_f64, g in 1.0..5000.0_f64, g_v in 10.0..5000.0_f64, ts in ts(),
    ) {
        let cfg = config(k, alpha, g, g_v, ts);
        let lp = make_inner_loop(&cfg).unwrap();
        let (l, s, t, c) = inner_from_blocks(&cfg);
        prop_assert!(lp.l.approx_eq(&l, 1e-10), "L: {} vs {}", lp.l, l);
        prop_assert!(lp.s.approx_eq(&s, 1e-10), "S: {} vs {}", lp.s, s);
        prop_assert!(lp.t.approx_eq(&t, 1e-10), "T: {} vs {}", lp.t, t);
        prop_assert!(lp.c.approx_eq(&c, 1e-10), "C: {} vs {}", lp.c, c);
    }

    #[test]
    fn discrete_velocity_pole_tracks_continuous_pole(a_ts in 1e-6..0.5_f64) {
        let ts = 1e-3;
        let cfg = config(MeasurementKind::Velocity, 1.0, a_ts / ts, 1.0, ts);
        let pole = make_inner_loop(&cfg).unwrap().t.poles().unwrap().roots[0];
        prop_assert!((pole.re - (1.0 - a_ts)).abs() < 1e-12);
        prop_assert!((pole.re - (-a_ts).exp()).abs() < a_ts * a_ts / 2.0);
    }
}

#[test]
fn outer_loop_facts() {
    let gains = OuterGains::new(5000.0, 25.0).unwrap();
    for kind in MeasurementKind::ALL {
        let cfg = config(kind, 1.0, 500.0, 1000.0, 1e-3);
        let (_, outer) = make_position_system(&cfg, &gains).unwrap();
        assert!(at_one(&outer.s).abs() < 1e-12);
        // reference gains at alpha = 1: every closed-loop pole inside the unit circle
        let poles = closed_loop_poles(&cfg, &gains).unwrap();
        assert!(classify_roots(&poles).all_in_unit, "{kind}: {poles:?}");
    }
    let cfg = config(MeasurementKind::Acceleration, 1.0, 500.0, 1000.0, 1e-3);
    let (inner, outer) = make_position_system(&cfg, &gains).unwrap();
    assert!(inner.c.approx_eq(&RationalTf::identity(inner.domain()), 1e-12));
    let pd_gp = dobkit::loops::make_pd(&gains, 1e-3).unwrap().series(&position_plant(1e-3).unwrap()).unwrap();
    assert!(outer.l.approx_eq(&pd_gp, 1e-12));
    assert_eq!(compensator_phase(&inner.c).unwrap(), CompensatorPhase::Neutral);
}
