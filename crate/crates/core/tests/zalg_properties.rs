use dobkit::zalg::{Connection, Domain, Polynomial, RationalTf};
use dobkit::Error;
use num_complex::Complex64;
use proptest::prelude::*;

const TS: f64 = 1e-3;

/// Real roots and conjugate pairs inside `|z| <= radius`, as a flat list.
fn root_set(max_degree: usize, radius: f64) -> impl Strategy<Value = Vec<Complex64>> {
    let unit = prop_oneof![
        (-radius..radius).prop_map(|r| vec![Complex64::new(r, 0.0)]),
        (0.05..radius, 0.1..3.0_f64).prop_map(|(m, a)| {
            let z = Complex64::from_polar(m, a);
            vec![z, z.conj()]
        }),
    ];
    prop::collection::vec(unit, 1..=max_degree)
        .prop_map(move |units| units.concat().into_iter().take(max_degree).collect::<Vec<_>>())
        .prop_filter("conjugate pairs must stay whole", |roots| {
            let pos = roots.iter().filter(|r| r.im > 0.0).count();
            let neg = roots.iter().filter(|r| r.im < 0.0).count();
            pos == neg
        })
}

fn separated(roots: &[Complex64], min_sep: f64) -> bool {
    roots
        .iter()
        .enumerate()
        .all(|(i, a)| roots[i + 1..].iter().all(|b| (a - b).norm() >= min_sep))
}

fn tf_from_roots(zeros: &[Complex64], poles: &[Complex64], gain: f64) -> RationalTf {
    RationalTf::new(
        Polynomial::from_roots(zeros).scale(gain),
        Polynomial::from_roots(poles),
        Domain::Discrete { ts: TS },
    )
    .unwrap()
}

proptest! {
    #[test]
    fn roots_of_from_roots_round_trip(roots in root_set(8, 2.0)) {
        prop_assume!(separated(&roots, 0.1));
        let found = Polynomial::from_roots(&roots).roots().unwrap();
        prop_assert_eq!(found.len(), roots.len());
        let mut used = vec![false; roots.len()];
        for r in &roots {
            let (j, d) = found
                .roots
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, f)| (j, (f - r).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            used[j] = true;
            prop_assert!(d < 1e-8, "root {} off by {:e}", r, d);
        }
    }

    #[test]
    fn roots_come_in_conjugate_pairs(coeffs in prop::collection::vec(-5.0..5.0_f64, 3..8)) {
        let p = Polynomial::new(coeffs);
        prop_assume!(p.degree().unwrap_or(0) >= 1 && p.leading().abs() > 1e-3);
        let rs = p.roots().unwrap();
        prop_assert_eq!(rs.len(), p.degree().unwrap());
        prop_assert!(rs.residual < 1e-8 * p.max_abs_coeff() * rs.max_magnitude().max(1.0).powi(8));
        for r in &rs.roots {
            if r.im != 0.0 {
                prop_assert!(rs.roots.iter().any(|s| (s - r.conj()).norm() < 1e-9));
            }
        }
    }

    #[test]
    fn series_evaluates_to_product(
        za in root_set(3, 1.5), pa in root_set(4, 0.95),
        zb in root_set(2, 1.5), pb in root_set(3, 0.95),
        ga in 0.1..10.0_f64, gb in -10.0..-0.1_f64,
        x_re in -2.0..2.0_f64, x_im in -2.0..2.0_f64,
    ) {
        prop_assume!(za.len() <= pa.len() && zb.len() <= pb.len());
        let a = tf_from_roots(&za, &pa, ga);
        let b = tf_from_roots(&zb, &pb, gb);
        let x = Complex64::new(x_re, x_im);
        prop_assume!(pa.iter().chain(&pb).all(|p| (p - x).norm() > 1e-3));
        let ab = a.series(&b).unwrap().eval(x).unwrap();
        let want = a.eval(x).unwrap() * b.eval(x).unwrap();
        prop_assert!((ab - want).norm() <= 1e-12 * want.norm().max(1e-300), "{ab} vs {want}");
    }

    #[test]
    fn frequency_response_is_conjugate_symmetric(
        z in root_set(3, 1.5), p in root_set(4, 0.95), omega in 1.0..3000.0_f64,
    ) {
        prop_assume!(z.len() <= p.len());
        let tf = tf_from_roots(&z, &p, 1.7);
        let plus = tf.freq_response(omega).unwrap();
        let minus = tf.freq_response(-omega).unwrap();
        prop_assert!((plus.conj() - minus).norm() <= 1e-12 * plus.norm().max(1e-300));
    }

    #[test]
    fn sensitivity_plus_complementary_is_one(
        z in root_set(3, 1.5), p in root_set(4, 1.5), k in 0.01..20.0_f64,
    ) {
        prop_assume!(z.len() <= p.len());
        let l = tf_from_roots(&z, &p, k);
        let s = l.sensitivity().unwrap();
        let t = l.feedback_unity().unwrap();
        let sum = s.parallel(&t).unwrap();
        prop_assert!(sum.approx_eq(&RationalTf::identity(l.domain()), 1e-10));
        // exact polynomial identity: num(S) + num(T) = den when both share den
        prop_assert!(s.den().approx_eq(t.den(), 1e-12));
        prop_assert!((s.num() + t.num()).approx_eq(s.den(), 1e-10));
    }
}

#[test]
fn arithmetic_examples() {
    let zm1 = Polynomial::new(vec![-1.0, 1.0]);
    let zp1 = Polynomial::new(vec![1.0, 1.0]);
    assert_eq!(&zm1 * &zp1, Polynomial::new(vec![-1.0, 0.0, 1.0]));
    assert_eq!(&zm1 * &Polynomial::one(), zm1);
    assert_eq!(&zm1 + &Polynomial::one(), Polynomial::new(vec![0.0, 1.0]));
    assert!(matches!(Polynomial::constant(3.0).roots(), Err(Error::Domain(_))));
    assert!(matches!(Polynomial::zero().roots(), Err(Error::Domain(_))));
}

#[test]
fn connection_examples() {
    // feedback_unity(a Ts z / (z - 1)) = a Ts z / ((1 + a Ts) z - 1)
    let a = 0.75;
    let l = RationalTf::discrete(&[0.0, a], &[-1.0, 1.0], TS).unwrap();
    let t = l.connect(&RationalTf::identity(l.domain()), Connection::FeedbackUnity).unwrap();
    let want = RationalTf::discrete(&[0.0, a], &[-1.0, 1.0 + a], TS).unwrap();
    assert!(t.approx_eq(&want, 1e-12));

    let one = RationalTf::identity(l.domain());
    assert!(l.connect(&one, Connection::Series).unwrap().approx_eq(&l, 1e-15));

    // K_P + K_D (z - 1)/(Ts z) = ((K_P + K_D/Ts) z - K_D/Ts) / z
    let kp = RationalTf::gain(5000.0, l.domain());
    let kd = RationalTf::discrete(&[-25.0, 25.0], &[0.0, TS], TS).unwrap();
    let pd = kp.connect(&kd, Connection::Parallel).unwrap();
    let want = RationalTf::discrete(&[-25000.0, 30000.0], &[0.0, 1.0], TS).unwrap();
    assert!(pd.approx_eq(&want, 1e-12));
}

#[test]
fn domains_never_mix() {
    let d = RationalTf::discrete(&[1.0], &[-0.5, 1.0], TS).unwrap();
    let c = RationalTf::continuous(&[1.0], &[1.0, 1.0]).unwrap();
    assert!(matches!(d.series(&c), Err(Error::MixedDomain(..))));
    assert!(matches!(d.parallel(&c), Err(Error::MixedDomain(..))));
    let other_ts = RationalTf::discrete(&[1.0], &[-0.5, 1.0], 2.0 * TS).unwrap();
    assert!(d.series(&other_ts).is_err());
}

#[test]
fn evaluating_at_a_pole_reports_it() {
    let tf = RationalTf::discrete(&[1.0], &[-0.5, 1.0], TS).unwrap();
    match tf.eval(Complex64::new(0.5, 0.0)) {
        Err(Error::PoleEvaluation(p)) => assert_eq!(p, Complex64::new(0.5, 0.0)),
        other => panic!("{other:?}"),
    }
}
