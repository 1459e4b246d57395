use hitfuzz::model::{DroneConfig, FuzzSpace, FuzzTest, Mode, Wind};
use hitfuzz::oracle::*;
use hitfuzz::runner::{blueprint_for, run_corpus, CorpusOptions};
use hitfuzz::simulator::{run_mission, ControlInput, ControlKind, SimParams};
use proptest::prelude::*;

fn brute(from: &[[f64; 3]], to: &[[f64; 3]]) -> f64 {
    let mut worst = 0.0f64;
    for a in from {
        let mut best = f64::INFINITY;
        for b in to {
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            best = best.min(d);
        }
        worst = worst.max(best);
    }
    worst
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-200.0f64..200.0, -200.0f64..200.0, 0.0f64..60.0]
}

// Random-walk trajectory starting near the origin, like a flight log.
fn walk(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec([-0.5f64..0.5, -0.5f64..0.5, -0.3f64..0.3], len).prop_map(|steps| {
        let mut p = [0.0, 0.0, 0.0];
        steps
            .into_iter()
            .map(|s| {
                p = [p[0] + s[0], p[1] + s[1], (p[2] + s[2]).max(0.0)];
                p
            })
            .collect()
    })
}

fn cloud() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop_oneof![prop::collection::vec(point(), 1..=2000), walk(1..=2000)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn directed_hausdorff_matches_brute_force(a in cloud(), b in cloud()) {
        let fast = directed_hausdorff(&a, &b);
        let slow = brute(&a, &b);
        prop_assert!((fast - slow).abs() <= 1e-9, "{} vs {}", fast, slow);
    }
}

#[test]
fn directed_hausdorff_of_a_subset_is_zero() {
    let a: Vec<[f64; 3]> = (0..50).map(|i| [i as f64, 0.0, 1.0]).collect();
    assert_eq!(directed_hausdorff(&a[10..20], &a), 0.0);
    assert!(directed_hausdorff(&a, &a[10..20]) > 0.0);
}

#[test]
fn blueprint_deviation_from_itself_is_zero() {
    let space = FuzzSpace::default_space();
    let bp = blueprint_for(&space, "BASIC-WAYPOINTS", Wind::CALM, SimParams::default()).unwrap();
    assert_eq!(max_deviation(&bp, &bp).unwrap(), 0.0);
    let r = extract_features("bp", &bp, &bp).unwrap();
    assert_eq!(classify(&r, &Thresholds::default(), bp.duration()), TestOutcomeKind::ValidNominal);
    assert!(r.landed && r.final_disarm && r.mission_complete && !r.freefall);
}

#[test]
fn kill_in_flight_is_abnormal() {
    let space = FuzzSpace::default_space();
    let m = space.mission("BASIC-WAYPOINTS").unwrap();
    let bp = blueprint_for(&space, "BASIC-WAYPOINTS", Wind::CALM, SimParams::default()).unwrap();
    let log = run_mission(m, &DroneConfig::default(), Wind::CALM, &[ControlInput::at(20.0, ControlKind::KillMotors)], SimParams::default());
    let r = extract_features("k", &log, &bp).unwrap();
    assert!(r.freefall && !r.mission_complete);
    assert!(r.touchdown_speed > 2.0);
    assert_eq!(classify(&r, &Thresholds::default(), bp.duration()), TestOutcomeKind::ValidAbnormal);

    let drift = run_mission(
        m,
        &DroneConfig::default(),
        "High Northerly".parse().unwrap(),
        &[ControlInput::at(20.0, ControlKind::SetMode { mode: Mode::Stabilized })],
        SimParams::default(),
    );
    assert!(max_deviation(&bp, &drift).unwrap() > 5.0);
}

fn record() -> impl Strategy<Value = OutcomeRecord> {
    (
        (0.0f64..20.0, 0.0f64..40.0, 10.0f64..300.0, 0.0f64..5.0),
        (any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()),
    )
        .prop_map(|((dev, alt, dur, td), (landed, ff, comp, disarm, untested))| OutcomeRecord {
            test_id: "p".into(),
            max_deviation: dev,
            max_altitude: alt,
            duration: dur,
            landed,
            freefall: ff,
            mission_complete: comp,
            final_disarm: disarm,
            touchdown_speed: td,
            untested,
            label: TestOutcomeKind::ValidNominal,
        })
}

// Makes exactly one feature no better than before.
fn worsen(r: &OutcomeRecord, which: u8, amount: f64) -> OutcomeRecord {
    let mut w = r.clone();
    match which % 7 {
        0 => w.max_deviation += amount,
        1 => w.max_altitude += amount,
        2 => w.duration += amount,
        3 => w.touchdown_speed += amount,
        4 => w.freefall = true,
        5 => w.mission_complete = false,
        _ => w.final_disarm = false,
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn classify_never_turns_abnormal_into_nominal(r in record(), which in any::<u8>(), amount in 0.0f64..100.0) {
        let th = Thresholds::default();
        let before = classify(&r, &th, 70.0);
        let after = classify(&worsen(&r, which, amount), &th, 70.0);
        if before == TestOutcomeKind::ValidAbnormal {
            prop_assert_eq!(after, TestOutcomeKind::ValidAbnormal);
        }
        if r.untested {
            prop_assert_eq!(after, TestOutcomeKind::InvalidUntested);
        }
    }
}

#[test]
fn each_feature_alone_crosses_its_threshold() {
    let th = Thresholds::default();
    let base = OutcomeRecord {
        test_id: "b".into(),
        max_deviation: 0.0,
        max_altitude: 12.5,
        duration: 70.0,
        landed: true,
        freefall: false,
        mission_complete: true,
        final_disarm: true,
        touchdown_speed: 1.0,
        untested: false,
        label: TestOutcomeKind::ValidNominal,
    };
    assert_eq!(classify(&base, &th, 70.0), TestOutcomeKind::ValidNominal);
    let at_limit = OutcomeRecord {
        max_deviation: 5.0,
        max_altitude: 20.0,
        duration: 140.0,
        touchdown_speed: 2.0,
        ..base.clone()
    };
    assert_eq!(classify(&at_limit, &th, 70.0), TestOutcomeKind::ValidNominal);
    for which in 0..7u8 {
        let w = worsen(&at_limit, which, 1e-6);
        assert_eq!(classify(&w, &th, 70.0), TestOutcomeKind::ValidAbnormal, "feature {which}");
    }
    let aborted = OutcomeRecord {
        label: TestOutcomeKind::Aborted,
        untested: true,
        ..base
    };
    assert_eq!(classify(&aborted, &th, 70.0), TestOutcomeKind::Aborted);
}

#[test]
fn profile_round_trips_through_csv() {
    let space = FuzzSpace::default_space();
    let sc = hitfuzz::fuzzer::enumerate_scenario(&space, &hitfuzz::fuzzer::ScenarioConstraint::l1_subgrid()).unwrap();
    let corpus: Vec<FuzzTest> = (0..30).map(|i| sc.test_at(i * 23).unwrap()).collect();
    let mut rows = run_corpus(&corpus, &space, &CorpusOptions::default()).unwrap().rows;
    for (i, r) in rows.iter_mut().enumerate() {
        r.cluster = (i % 3 == 0).then_some(i / 3);
    }
    let mut buf = Vec::new();
    write_profile(&mut buf, &rows).unwrap();
    let back = read_profile(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
    let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("test_id,mode,msn_state,gf,gf_pred,gf_act,wind"));
    assert!(header.ends_with("outcome,cluster"));
}

#[test]
fn malformed_profile_is_rejected() {
    let bad = "test_id,mode\nx,OFFBOARD\n";
    assert!(read_profile(bad.as_bytes()).is_err());
}
