//! Acceptance criteria for the primary component. Each prints one PASS or FAIL line.
//!
//! Run with `cargo test -p hitfuzz --test acceptance`.

use std::collections::BTreeSet;
use std::io::BufReader;
use std::net::TcpListener;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hitfuzz::fuzzer::{enumerate_scenario, read_corpus, sample_random, ScenarioConstraint};
use hitfuzz::gateway::{
    downselect, kmeans, ledger_gate, parse_entry, zscore_select, Budget, Candidate, ClusterModel, GateVerdict, KChoice,
    MitigationStatus,
};
use hitfuzz::model::*;
use hitfuzz::oracle::*;
use hitfuzz::runner::*;
use hitfuzz::service::{serve_l2, ScriptedClient, ServeOptions};
use hitfuzz::simulator::{distance_outside, EventKind, SimParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn space() -> FuzzSpace {
    FuzzSpace::default_space()
}

fn hit(task: Task, mode: Mode, state: Lifecycle) -> Hit {
    Hit {
        id: "1".into(),
        drones: vec!["BLUE".into()],
        task,
        precondition_mode: mode,
        precondition_state: state,
        precondition_params: Default::default(),
        delay_s: 0.0,
    }
}

fn single(id: &str, cfg: DroneConfig, hits: Vec<Hit>) -> FuzzTest {
    let mut t = FuzzTest::nominal(id, "BASIC-WAYPOINTS", Wind::CALM);
    t.drone_config.insert("BLUE".into(), cfg);
    t.roles.push(RoleAssignment {
        role: "RPIC".into(),
        interaction_device: "RC TRANSMITTER".into(),
        hits,
    });
    t
}

fn proxy_run(t: &FuzzTest) -> TestExecution {
    execute_test(t, &space(), &mut ProxyHuman::new(), &mut Unpaced, &ExecOptions::default()).expect("test runs")
}

fn enumeration_count() -> Verdict {
    let space = space();
    let start = Instant::now();
    let sc = enumerate_scenario(&space, &ScenarioConstraint::default()).map_err(|e| e.to_string())?;
    let expected: u64 = 7 * 6 * 7 * 13 * 2 * (3 * 7);
    ensure!(sc.count() == 160_524 && sc.count() == expected, "count {}", sc.count());
    ensure!(sc.geofence_count() == 13, "geofence combinations {}", sc.geofence_count());
    // Geofence sub-count from the legality rule directly.
    let p = &space.parameters;
    let mut legal = 0;
    for &s in &p.geofence_status {
        for &pr in &p.geofence_prediction {
            for &a in &p.geofence_action {
                legal += usize::from(geofence_legal(s, pr, a));
            }
        }
    }
    ensure!(legal == 13, "legality rule admits {legal}");
    let mut bytes = 0usize;
    let mut n = 0u64;
    for t in sc.iter() {
        bytes += t.to_json().len() + 1;
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(n == 160_524, "iterated {n}");
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("160524 tests, 13 geofence combinations, {} MB serialized in {secs:.1}s", bytes / 1_000_000))
}

fn blueprint_sanity() -> Verdict {
    let bp = blueprint_for(&space(), "BASIC-WAYPOINTS", Wind::CALM, SimParams::default()).map_err(|e| e.to_string())?;
    let last = bp.last().ok_or("empty log")?;
    ensure!(bp.has_event(EventKind::MissionComplete), "mission incomplete");
    ensure!(bp.has_event(EventKind::Touchdown) && last.pos[2] <= 0.0, "did not land");
    ensure!(bp.has_event(EventKind::Disarmed) && !last.armed, "did not disarm");
    let alt = bp.max_altitude();
    ensure!((alt - 12.5).abs() <= 0.5, "max altitude {alt}");
    let dev = max_deviation(&bp, &bp).map_err(|e| e.to_string())?;
    ensure!(dev == 0.0, "self deviation {dev}");
    Ok(format!("max altitude {alt:.2} m, duration {:.1} s, self deviation 0", bp.duration()))
}

fn failure_shapes() -> Verdict {
    let mut notes = Vec::new();

    let a = proxy_run(&single(
        "A",
        DroneConfig {
            geofence_status: Switch::On,
            geofence_action: GeofenceAction::None,
            throttle: Throttle::JustAbove,
            ..DroneConfig::default()
        },
        vec![hit(Task::ChangeMode(Mode::Stabilized), Mode::Offboard, Lifecycle::Fly)],
    ));
    ensure!(a.all_performed(), "(a) HIT not performed");
    ensure!(a.log.has_event(EventKind::Breach), "(a) no breach");
    ensure!(a.log.max_altitude() > 12.5 + 0.5, "(a) altitude {}", a.log.max_altitude());
    ensure!(!a.log.has_event(EventKind::MissionComplete), "(a) mission completed");
    notes.push(format!("(a) breach, alt {:.1} m", a.log.max_altitude()));

    let b = proxy_run(&single("B", DroneConfig::default(), vec![hit(Task::KillMotors, Mode::Offboard, Lifecycle::Hover)]));
    ensure!(b.all_performed(), "(b) HIT not performed");
    ensure!(b.log.has_event(EventKind::Freefall), "(b) no freefall");
    ensure!(!b.log.has_event(EventKind::MissionComplete), "(b) mission completed");
    notes.push("(b) freefall".into());

    let c = proxy_run(&single(
        "C",
        DroneConfig {
            throttle: Throttle::MaxLow,
            ..DroneConfig::default()
        },
        vec![hit(Task::ChangeMode(Mode::Posctl), Mode::Offboard, Lifecycle::Fly)],
    ));
    ensure!(c.all_performed(), "(c) HIT not performed");
    let performed = match c.hits[0].status {
        HitStatus::Performed { performed, .. } => performed,
        s => return Err(format!("(c) {s:?}")),
    };
    let at = |t: f64| c.log.samples.iter().find(|s| s.t >= t).map(|s| s.pos[2]).unwrap_or(0.0);
    ensure!(at(performed + 2.0) < at(performed), "(c) no descent");
    let hard = c.log.has_event(EventKind::HardLanding);
    let early = c.log.has_event(EventKind::EarlyLanding);
    ensure!(hard || early, "(c) neither hard nor early landing");
    notes.push(format!("(c) {}", if hard { "hard landing" } else { "early landing" }));

    let d = proxy_run(&single(
        "D",
        DroneConfig {
            geofence_status: Switch::On,
            geofence_action: GeofenceAction::Return,
            ..DroneConfig::default()
        },
        vec![],
    ));
    let sp = space();
    let fence = &sp.mission("BASIC-WAYPOINTS").unwrap().geofence;
    let t0 = d.log.events_of(EventKind::Breach).next().ok_or("(d) no breach")?.t;
    let worst = d
        .log
        .samples
        .iter()
        .filter(|s| s.t >= t0)
        .map(|s| distance_outside(fence, s.pos))
        .fold(0.0, f64::max);
    // Cruise speed over one tick plus the velocity time constant.
    let bound = 5.0 * (0.1 + 0.5);
    ensure!(worst <= bound, "(d) {worst:.2} m outside the fence");
    let end = d.log.last().ok_or("(d) empty log")?;
    ensure!(end.pos[0].hypot(end.pos[1]) < 1.0 && end.pos[2] <= 0.0 && !end.armed, "(d) not home: {:?}", end.pos);
    notes.push(format!("(d) {worst:.2} m past fence, home"));
    Ok(notes.join("; "))
}

fn brute_hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn random_track(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    let mut p = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(0.0..20.0)];
    (0..n)
        .map(|_| {
            p = [
                p[0] + rng.random_range(-0.6..0.6),
                p[1] + rng.random_range(-0.6..0.6),
                (p[2] + rng.random_range(-0.3f64..0.3)).max(0.0),
            ];
            p
        })
        .collect()
}

fn oracle_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=2000);
        let m = rng.random_range(1..=2000);
        let a = random_track(&mut rng, n);
        let b = random_track(&mut rng, m);
        let err = (directed_hausdorff(&a, &b) - brute_hausdorff(&a, &b)).abs();
        worst = worst.max(err);
    }
    ensure!(worst <= 1e-9, "max error {worst:e}");

    let th = Thresholds::default();
    let mut flips = 0;
    let mut abnormal_seen = 0;
    let mut raised = 0;
    for i in 0..1000 {
        let r = OutcomeRecord {
            test_id: format!("m{i}"),
            max_deviation: rng.random_range(0.0..4.0),
            max_altitude: rng.random_range(10.0..14.0),
            duration: rng.random_range(60.0..90.0),
            landed: true,
            freefall: rng.random_bool(0.05),
            mission_complete: rng.random_bool(0.9),
            final_disarm: rng.random_bool(0.95),
            touchdown_speed: rng.random_range(0.0..2.5),
            untested: false,
            label: TestOutcomeKind::ValidNominal,
        };
        let before = classify(&r, &th, 71.0);
        let mut w = r.clone();
        let amount = rng.random_range(0.0..50.0);
        match rng.random_range(0..7) {
            0 => w.max_deviation += amount,
            1 => w.max_altitude += amount,
            2 => w.duration += amount,
            3 => w.touchdown_speed += amount,
            4 => w.freefall = true,
            5 => w.mission_complete = false,
            _ => w.final_disarm = false,
        }
        let after = classify(&w, &th, 71.0);
        if before == TestOutcomeKind::ValidAbnormal {
            abnormal_seen += 1;
        }
        if before == TestOutcomeKind::ValidAbnormal && after != TestOutcomeKind::ValidAbnormal {
            flips += 1;
        }
        if after == TestOutcomeKind::ValidAbnormal && before != TestOutcomeKind::ValidAbnormal {
            raised += 1;
        }
    }
    ensure!(flips == 0, "{flips} Abnormal records turned Nominal");
    Ok(format!("hausdorff max error {worst:.1e} over 100 pairs; 1000 perturbations, {abnormal_seen} abnormal before, {raised} raised, 0 lowered"))
}

fn reference_kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cent = vec![points[rng.random_range(0..points.len())].clone()];
    while cent.len() < k {
        let d: Vec<f64> = points
            .iter()
            .map(|p| cent.iter().map(|c| sq(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let r = rng.random::<f64>() * d.iter().sum::<f64>();
        let mut acc = 0.0;
        let idx = d
            .iter()
            .position(|x| {
                acc += x;
                acc > r
            })
            .unwrap_or(points.len() - 1);
        cent.push(points[idx].clone());
    }
    let nearest = |p: &[f64], cent: &[Vec<f64>]| {
        (0..cent.len()).fold(0, |best, c| if sq(p, &cent[c]) < sq(p, &cent[best]) { c } else { best })
    };
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &cent)).collect();
    for _ in 0..300 {
        for (c, centroid) in cent.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                for j in 0..centroid.len() {
                    centroid[j] = members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &cent)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

fn blob_points(centres: &[[f64; 2]], per: usize, spread: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    centres
        .iter()
        .flat_map(|c| {
            (0..per)
                .map(|_| vec![c[0] + rng.random_range(-spread..spread), c[1] + rng.random_range(-spread..spread)])
                .collect::<Vec<_>>()
        })
        .collect()
}

fn clustering() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fixtures: Vec<Vec<Vec<f64>>> = vec![
        (0..100).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect(),
        blob_points(&[[0.0, 0.0], [5.0, 1.0], [2.0, 6.0], [8.0, 8.0]], 25, 2.0, &mut rng),
    ];
    for (f, pts) in fixtures.iter().enumerate() {
        for k in 2..=6 {
            let m = kmeans(pts, k, 11).map_err(|e| e.to_string())?;
            ensure!(m.assignments == reference_kmeans(pts, k, 11), "fixture {f} k {k} differs from reference");
            // Total = within + between sums of squares.
            let d = pts[0].len();
            let n = pts.len() as f64;
            let mean: Vec<f64> = (0..d).map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / n).collect();
            let tss: f64 = pts.iter().map(|p| (0..d).map(|j| (p[j] - mean[j]).powi(2)).sum::<f64>()).sum();
            let sizes = m.sizes();
            let bcss: f64 = (0..k).map(|c| sizes[c] as f64 * (0..d).map(|j| (m.centroids[c][j] - mean[j]).powi(2)).sum::<f64>()).sum();
            ensure!(((m.wcss + bcss) - tss).abs() <= 1e-6 * tss, "fixture {f} k {k}: WCSS identity off");
        }
    }

    let three = blob_points(&[[0.0, 0.0], [20.0, 0.0], [10.0, 17.0]], 40, 1.5, &mut rng);
    let k = hitfuzz::gateway::choose_k_elbow(&three, 1..=8, 3).map_err(|e| e.to_string())?;
    ensure!(k == 3, "elbow picked {k}");

    // Nine outcome blobs in (max deviation, max altitude).
    let mut rows = Vec::new();
    for b in 0..9 {
        for i in 0..30 {
            let t = FuzzTest::nominal(format!("B{b}-{i:02}"), "BASIC-WAYPOINTS", Wind::CALM);
            let rec = OutcomeRecord {
                test_id: t.test_id.clone(),
                max_deviation: (b % 3) as f64 * 40.0 + rng.random_range(0.0..3.0),
                max_altitude: (b / 3) as f64 * 40.0 + 10.0 + rng.random_range(0.0..3.0),
                duration: 70.0 + rng.random_range(0.0..3.0),
                landed: true,
                freefall: false,
                mission_complete: b == 0,
                final_disarm: true,
                touchdown_speed: 1.0,
                untested: false,
                label: if b == 0 { TestOutcomeKind::ValidNominal } else { TestOutcomeKind::ValidAbnormal },
            };
            rows.push(ProfileRow::from_test(&t, rec));
        }
    }
    let (pm, sel) = downselect(&mut rows, KChoice::Fixed(9), 5, Budget::new(25, 30).unwrap()).map_err(|e| e.to_string())?;
    let nonempty: BTreeSet<usize> = pm.model.assignments.iter().copied().collect();
    ensure!(nonempty.len() >= 9, "{} non-empty clusters", nonempty.len());
    ensure!((25..=30).contains(&sel.ids.len()), "selected {}", sel.ids.len());
    let covered: BTreeSet<usize> = sel.clusters.iter().copied().collect();
    ensure!(covered == nonempty, "clusters without a pick");

    let line: Vec<Vec<f64>> = (1..=20).map(|i| vec![i as f64]).collect();
    let model = ClusterModel {
        k: 1,
        centroids: vec![vec![0.0]],
        assignments: vec![0; 20],
        wcss: 0.0,
        wcss_history: vec![],
        iterations: 0,
        converged: true,
        seed: None,
        degenerate: false,
        group_keys: None,
    };
    let cands: Vec<Candidate> = (1..=20)
        .map(|i| Candidate {
            test_id: format!("r{i:02}"),
            abnormal: false,
        })
        .collect();
    let s = zscore_select(&model, &line, &cands, Budget::new(1, 20).unwrap()).map_err(|e| e.to_string())?;
    let eligible: BTreeSet<usize> = (0..20).filter(|&i| s.eligible[i]).map(|i| i + 1).collect();
    ensure!(eligible == BTreeSet::from([1, 2, 3, 18, 19, 20]), "eligible ranks {eligible:?}");
    Ok(format!(
        "reference match on 100 points, WCSS identity, elbow k=3, {} picks over {} clusters, ranks {{1,2,3,18,19,20}}",
        sel.ids.len(),
        nonempty.len()
    ))
}

fn subgrid() -> Vec<FuzzTest> {
    enumerate_scenario(&space(), &ScenarioConstraint::l1_subgrid()).unwrap().iter().collect()
}

fn determinism() -> Verdict {
    let corpus = subgrid();
    let profile = |p: usize| -> Result<Vec<u8>, String> {
        let opts = CorpusOptions {
            parallelism: p,
            ..Default::default()
        };
        let res = run_corpus(&corpus, &space(), &opts).map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        write_profile(&mut out, &res.rows).map_err(|e| e.to_string())?;
        Ok(out)
    };
    let one = profile(1)?;
    let eight = profile(8)?;
    ensure!(one == eight, "profiles differ between parallelism 1 and 8");

    let mut shared = ProxyHuman::new();
    let mut mismatched = Vec::new();
    for t in &corpus {
        let chained = execute_test(t, &space(), &mut shared, &mut Unpaced, &ExecOptions::default()).map_err(|e| e.to_string())?;
        if chained.log != proxy_run(t).log {
            mismatched.push(t.test_id.clone());
        }
    }
    ensure!(mismatched.is_empty(), "back-to-back differs for {mismatched:?}");
    Ok(format!("{} tests: profiles byte-identical ({} bytes), back-to-back equals isolated", corpus.len(), one.len()))
}

fn pipeline_scale() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let bin = env!("CARGO_BIN_EXE_hitfuzz");
    let start = Instant::now();
    let steps: Vec<Vec<String>> = vec![
        vec!["generate".into(), "--scenario".into(), "l1-subgrid".into(), "--out".into(), p("c.jsonl")],
        vec!["run-l1".into(), "--corpus".into(), p("c.jsonl"), "--out".into(), p("p.csv"), "--logs".into(), p("logs")],
        vec!["blueprint".into(), "--wind".into(), "Medium Northerly".into(), "--out".into(), p("bp.log")],
        vec![
            "analyze".into(), "--profile".into(), p("p.csv"), "--blueprint".into(), p("bp.log"), "--logs".into(), p("logs"),
            "--out".into(), p("a.csv"),
        ],
        vec![
            "downselect".into(), "--profile".into(), p("a.csv"), "--corpus".into(), p("c.jsonl"), "--budget".into(),
            "25:30".into(), "--out".into(), p("l2.jsonl"),
        ],
    ];
    for args in &steps {
        let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr));
    }
    let secs = start.elapsed().as_secs_f64();
    let rows = read_profile(std::fs::File::open(Path::new(&p("a.csv"))).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let nominal = rows.iter().filter(|r| r.outcome() == TestOutcomeKind::ValidNominal).count();
    let abnormal = rows.iter().filter(|r| r.outcome() == TestOutcomeKind::ValidAbnormal).count();
    let (_, l2) = read_corpus(BufReader::new(std::fs::File::open(p("l2.jsonl")).map_err(|e| e.to_string())?))
        .map_err(|e| e.to_string())?;
    ensure!((650..=750).contains(&rows.len()), "{} tests", rows.len());
    ensure!(nominal > 0 && abnormal > 0, "nominal {nominal}, abnormal {abnormal}");
    ensure!((25..=30).contains(&l2.len()), "L2 corpus of {}", l2.len());
    ensure!(secs < 600.0, "took {secs:.1}s");
    Ok(format!("{} tests in {secs:.1}s: {nominal} nominal, {abnormal} abnormal, {} in L2 corpus", rows.len(), l2.len()))
}

fn agent_equivalence() -> Verdict {
    let space = space();
    let corpus = sample_random(&space, &ScenarioConstraint::l1_subgrid(), 20, 20).map_err(|e| e.to_string())?;
    let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    let opts = ServeOptions {
        lockstep: true,
        max_sessions: Some(1),
        ..Default::default()
    };
    let served = corpus.clone();
    let server = std::thread::spawn(move || serve_l2(listener, &served, &FuzzSpace::default_space(), &opts));
    std::thread::sleep(Duration::from_millis(20));
    ScriptedClient::exact().run(addr).map_err(|e| e.to_string())?;
    let report = server.join().map_err(|_| "server panicked".to_string())?.map_err(|e| e.to_string())?;
    ensure!(report.completed.len() == 20, "{} completed", report.completed.len());
    for (t, live) in corpus.iter().zip(&report.completed) {
        ensure!(live.execution.test_id == t.test_id, "order differs at {}", t.test_id);
        ensure!(live.execution.log == proxy_run(t).log, "log differs for {}", t.test_id);
    }
    let hits: usize = report.completed.iter().map(|o| o.execution.hits.len()).sum();
    Ok(format!("20 tests, {hits} HITs, identical logs"))
}

fn ledger() -> Verdict {
    let mut e = parse_entry(include_str!("../fixtures/ledger_geofence.toml")).map_err(|e| e.to_string())?;
    let g = ledger_gate(&e);
    ensure!(g.verdict == GateVerdict::NotReady, "geofence ledger fixture is {:?}", g.verdict);
    ensure!(g.text.trim_end().ends_with("NOT READY FOR FIELD-TESTING"), "report gate line missing");
    for c in &mut e.root_causes {
        for m in &mut c.mitigations {
            m.status = MitigationStatus::Passed;
        }
    }
    let ready = ledger_gate(&e).verdict;
    ensure!(ready == GateVerdict::Ready, "all passed is {ready:?}");
    Ok(format!("fixture NotReady ({} open), all passed Ready", g.diagnostics.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("enumeration count", enumeration_count),
        ("blueprint sanity", blueprint_sanity),
        ("failure-shape reproduction", failure_shapes),
        ("oracle correctness", oracle_correctness),
        ("clustering", clustering),
        ("determinism and reset", determinism),
        ("pipeline scale", pipeline_scale),
        ("agent equivalence", agent_equivalence),
        ("ledger gate", ledger),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
