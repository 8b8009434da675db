use std::collections::BTreeMap;

use dobkit::MeasurementKind;
use dobkit_cli::config::ReferenceKind;
use dobkit_cli::{ConfigFile, CsvTable};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        prop::num::f64::NORMAL,
        prop::num::f64::SUBNORMAL,
        Just(0.0),
        Just(-0.0),
        -1e3..1e3_f64,
    ]
}

fn opt_float() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(finite())
}

prop_compose! {
    fn any_config()(
        plant in [opt_float(), opt_float(), opt_float(), opt_float()],
        kind in prop::option::of(prop_oneof![
            Just(MeasurementKind::Acceleration),
            Just(MeasurementKind::Velocity),
            Just(MeasurementKind::Position),
        ]),
        dob in [opt_float(), opt_float(), opt_float()],
        outer in [opt_float(), opt_float()],
        scenario in [opt_float(), opt_float(), opt_float()],
        reference_kind in prop::option::of(prop_oneof![
            Just(ReferenceKind::Step), Just(ReferenceKind::Sine), Just(ReferenceKind::Hold),
        ]),
        disturbance in prop::collection::btree_map(0u32..20, [opt_float(), opt_float(), opt_float()], 0..4),
        noise in [opt_float(), opt_float(), opt_float()],
        seed in prop::option::of(any::<u64>()),
    ) -> ConfigFile {
        // an index with no fields set cannot be written out
        let disturbance: BTreeMap<_, _> =
            disturbance.into_iter().filter(|(_, w)| w.iter().any(Option::is_some)).collect();
        ConfigFile {
            j_m: plant[0], k_t: plant[1], j_mn: plant[2], k_tn: plant[3],
            kind, g_dob: dob[0], g_v: dob[1], ts: dob[2],
            kp: outer[0], kd: outer[1],
            duration: scenario[0], reference_kind, reference_amplitude: scenario[1], reference_freq: scenario[2],
            disturbance,
            noise_position: noise[0], noise_velocity: noise[1], noise_acceleration: noise[2],
            seed,
        }
    }
}

fn same_bits(a: &ConfigFile, b: &ConfigFile) -> bool {
    // PartialEq treats 0.0 == -0.0; the text form must keep the sign too
    format!("{a:?}") == format!("{b:?}")
}

proptest! {
    #[test]
    fn config_parse_serialize_parse_is_identity(cfg in any_config()) {
        let text = cfg.serialize();
        let once = ConfigFile::parse(&text).unwrap();
        prop_assert!(same_bits(&once, &cfg), "{text}");
        let twice = ConfigFile::parse(&once.serialize()).unwrap();
        prop_assert!(same_bits(&twice, &once));
    }

    #[test]
    fn csv_numbers_round_trip_exactly(rows in prop::collection::vec(prop::collection::vec(finite(), 3), 1..20)) {
        let mut t = CsvTable::new(["a", "b", "c"]);
        for r in &rows {
            t.push(r.clone());
        }
        let back = CsvTable::parse(&t.to_string_lossless()).unwrap();
        prop_assert_eq!(back.rows.len(), rows.len());
        for (x, y) in back.rows.iter().flatten().zip(rows.iter().flatten()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
