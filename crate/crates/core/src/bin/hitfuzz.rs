use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use hitfuzz::fuzzer::{
    enumerate_scenario, fuzz_timing, read_corpus, sample_random, write_corpus, write_corpus_header, CorpusHeader,
    ScenarioConstraint, RANDOM_GENERATOR,
};
use hitfuzz::gateway::{
    downselect, ledger_gate, outcome_counts, parse_entry, Budget, GateVerdict, KChoice, LedgerEntry, MitigationStatus,
};
use hitfuzz::model::{parse_fuzz_space, FuzzSpace, FuzzTest, Wind};
use hitfuzz::oracle::{classify, extract_features, read_profile, write_profile, ProfileRow, TestOutcomeKind, Thresholds};
use hitfuzz::runner::{blueprint_for, log_file_name, run_corpus, CorpusOptions, ExecOptions};
use hitfuzz::service::{serve_l2, ServeOptions, Timing};
use hitfuzz::simulator::{FlightLog, SimParams};

type Res<T> = Result<T, Box<dyn std::error::Error>>;

const DATA_DIR_ENV: &str = "HITFUZZ_DATA_DIR";

#[derive(Parser)]
#[command(name = "hitfuzz", version, about = "Human-interaction fuzzing pipeline for small drones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate or sample a scenario into a test corpus.
    Generate(GenerateArgs),
    /// Fly the zero-HIT mission and write its log.
    Blueprint(BlueprintArgs),
    /// Run a corpus against the proxy human and write the result profile.
    RunL1(RunL1Args),
    /// Re-label a profile against a blueprint and thresholds.
    Analyze(AnalyzeArgs),
    /// Cluster a profile and pick the tests to run with humans.
    Downselect(DownselectArgs),
    /// Serve a corpus to live console sessions.
    ServeL2(ServeArgs),
    /// Safety ledger of analyzed failures.
    #[command(subcommand)]
    Ledger(LedgerCommand),
}

#[derive(Args)]
struct SpaceArg {
    /// Fuzzing space document; the built-in space when omitted.
    #[arg(long)]
    space: Option<PathBuf>,
}

impl SpaceArg {
    fn load(&self) -> Res<FuzzSpace> {
        match &self.space {
            Some(p) => Ok(parse_fuzz_space(&read(p)?)?),
            None => Ok(FuzzSpace::default_space()),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    space: SpaceArg,
    /// Scenario constraint JSON, or `l1-subgrid` for the shipped sub-grid.
    #[arg(long)]
    scenario: Option<String>,
    /// Draw this many tests uniformly instead of enumerating.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fuzz HIT delays uniformly in [0, S] seconds.
    #[arg(long, value_name = "S")]
    max_delay: Option<f64>,
    /// Corpus file; only the summary is printed when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BlueprintArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long, default_value = "BASIC-WAYPOINTS")]
    mission: String,
    #[arg(long, default_value = "NONE")]
    wind: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunL1Args {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-test flight logs.
    #[arg(long)]
    logs: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Threshold TOML.
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Seconds between a Go and the proxy's control.
    #[arg(long, default_value_t = 0.0)]
    proxy_latency: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    blueprint: PathBuf,
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Recompute features from these logs instead of trusting the profile.
    #[arg(long)]
    logs: Option<PathBuf>,
    /// Labeled profile; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DownselectArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, default_value = "auto")]
    k: String,
    #[arg(long, default_value = "25:30")]
    budget: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpus the profile came from. With it the output is a runnable corpus, otherwise a list of ids.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Profile with the cluster column filled.
    #[arg(long)]
    clustered: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 7400)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Hold the simulation after each Go until the console answers.
    #[arg(long)]
    lockstep: bool,
    #[arg(long, default_value_t = 1.0)]
    speedup: f64,
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    max_sessions: Option<usize>,
    #[arg(long, default_value_t = 30.0)]
    heartbeat_timeout: f64,
    /// Profile of the completed tests.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    thresholds: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LedgerCommand {
    /// Store an entry from a TOML file.
    Add {
        file: PathBuf,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Print the verdict; exits 2 when not ready.
    Gate {
        id: String,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Print the readiness table.
    Report {
        id: String,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Update a mitigation addressed as CAUSE.MITIGATION (1-based).
    SetStatus {
        id: String,
        mitigation: String,
        status: String,
        /// Set the field-test status instead.
        #[arg(long)]
        field_test: bool,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Print an entry as JSON.
    Export {
        id: String,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Ids and verdicts of every entry.
    List {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn read(p: &Path) -> Res<String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()).into())
}

fn create(p: &Path) -> Res<BufWriter<File>> {
    if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?))
}

fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn load_corpus(p: &Path) -> Res<(Option<CorpusHeader>, Vec<FuzzTest>)> {
    let f = File::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
    Ok(read_corpus(BufReader::new(f))?)
}

fn load_thresholds(p: Option<&Path>) -> Res<Thresholds> {
    let th = match p {
        Some(p) => toml::from_str::<Thresholds>(&read(p)?)?,
        None => Thresholds::default(),
    };
    th.check()?;
    Ok(th)
}

fn load_profile(p: &Path) -> Res<Vec<ProfileRow>> {
    let f = File::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
    Ok(read_profile(BufReader::new(f))?)
}

fn print_counts(rows: &[ProfileRow]) {
    let counts = outcome_counts(rows);
    let parts: Vec<String> = TestOutcomeKind::ALL
        .iter()
        .map(|k| format!("{}={}", k, counts.get(k).copied().unwrap_or(0)))
        .collect();
    println!("outcomes: {}", parts.join(" "));
}

fn generate(a: GenerateArgs) -> Res<()> {
    let start = Instant::now();
    let space = a.space.load()?;
    let constraint = match a.scenario.as_deref() {
        None => ScenarioConstraint::default(),
        Some("l1-subgrid") => ScenarioConstraint::l1_subgrid(),
        Some(p) => ScenarioConstraint::parse(&read(Path::new(p))?)?,
    };
    let scenario = enumerate_scenario(&space, &constraint)?;
    let total = scenario.count();
    let emitted = a.sample.map_or(total, |n| n as u64);
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        let generator = if a.sample.is_some() { RANDOM_GENERATOR } else { "scenario" };
        let mut header = CorpusHeader::new(generator, &space, &constraint, emitted);
        if a.sample.is_some() {
            header.seed = Some(a.seed);
        }
        header.max_delay_s = a.max_delay;
        let timed = |t: FuzzTest| match a.max_delay {
            Some(d) => fuzz_timing(&t, a.seed, d),
            None => t,
        };
        match a.sample {
            Some(n) => {
                let tests: Vec<FuzzTest> = sample_random(&space, &constraint, a.seed, n)?.into_iter().map(timed).collect();
                write_corpus(&mut w, &header, &tests)?;
            }
            None => {
                write_corpus_header(&mut w, &header)?;
                for t in scenario.iter() {
                    writeln!(w, "{}", timed(t).to_json())?;
                }
            }
        }
        w.flush()?;
    }
    println!(
        "scenario tests: {total} (geofence combinations: {}); emitted: {}{} in {:.2}s",
        scenario.geofence_count(),
        if a.out.is_some() { emitted } else { 0 },
        a.out.as_ref().map_or(String::new(), |p| format!(" to {}", p.display())),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn blueprint(a: BlueprintArgs) -> Res<()> {
    let space = a.space.load()?;
    let wind: Wind = a.wind.parse()?;
    let log = blueprint_for(&space, &a.mission, wind, SimParams::default())?;
    let mut w = create(&a.out)?;
    w.write_all(log.to_text().as_bytes())?;
    w.flush()?;
    println!(
        "blueprint {} wind {}: {} samples, {:.1}s, max altitude {:.2} m",
        a.mission,
        wind.label(),
        log.samples.len(),
        log.duration(),
        log.max_altitude()
    );
    Ok(())
}

fn run_l1(a: RunL1Args) -> Res<()> {
    let start = Instant::now();
    let space = a.space.load()?;
    let (_, corpus) = load_corpus(&a.corpus)?;
    let opts = CorpusOptions {
        parallelism: a.parallel.max(1),
        exec: ExecOptions::default(),
        thresholds: load_thresholds(a.thresholds.as_deref())?,
        proxy_latency: a.proxy_latency,
        log_dir: a.logs.clone(),
    };
    let res = run_corpus(&corpus, &space, &opts)?;
    let mut w = create(&a.out)?;
    write_profile(&mut w, &res.rows)?;
    w.flush()?;
    if let Some(dir) = &a.logs {
        for bp in res.blueprints.iter() {
            let name = log_file_name(&format!("BLUEPRINT-{}-{}", bp.mission, bp.wind));
            std::fs::write(dir.join(name), bp.to_text())?;
        }
    }
    println!("ran {} tests in {:.2}s", res.rows.len(), start.elapsed().as_secs_f64());
    print_counts(&res.rows);
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Res<()> {
    let mut rows = load_profile(&a.profile)?;
    let bp = FlightLog::parse(&read(&a.blueprint)?)?;
    let th = load_thresholds(a.thresholds.as_deref())?;
    for r in &mut rows {
        let keep = r.record.label;
        if let Some(dir) = &a.logs {
            let log = FlightLog::parse(&read(&dir.join(log_file_name(r.test_id())))?)?;
            r.record = extract_features(r.test_id(), &log, &bp)?;
        }
        r.record.untested = keep == TestOutcomeKind::InvalidUntested;
        r.record.label = if keep == TestOutcomeKind::Aborted {
            TestOutcomeKind::Aborted
        } else {
            TestOutcomeKind::ValidNominal
        };
        r.record.label = classify(&r.record, &th, bp.duration());
    }
    match &a.out {
        Some(p) => {
            let mut w = create(p)?;
            write_profile(&mut w, &rows)?;
            w.flush()?;
            print_counts(&rows);
        }
        None => write_profile(std::io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn downselect_cmd(a: DownselectArgs) -> Res<()> {
    let mut rows = load_profile(&a.profile)?;
    let k: KChoice = a.k.parse()?;
    let budget: Budget = a.budget.parse()?;
    let (pm, sel) = downselect(&mut rows, k, a.seed, budget)?;
    if let Some(p) = &a.clustered {
        let mut w = create(p)?;
        write_profile(&mut w, &rows)?;
        w.flush()?;
    }
    let mut w = create(&a.out)?;
    match &a.corpus {
        Some(src) => {
            let (header, tests) = load_corpus(src)?;
            let by_id: BTreeMap<&str, &FuzzTest> = tests.iter().map(|t| (t.test_id.as_str(), t)).collect();
            let picked: Vec<&FuzzTest> = sel
                .ids
                .iter()
                .map(|id| by_id.get(id.as_str()).copied().ok_or_else(|| format!("test {id} is not in {}", src.display())))
                .collect::<Result<_, _>>()?;
            let space = FuzzSpace::default_space();
            let mut h = header.unwrap_or_else(|| CorpusHeader::new("downselect", &space, &ScenarioConstraint::default(), 0));
            h.generator = "downselect".into();
            h.count = picked.len() as u64;
            write_corpus(&mut w, &h, picked)?;
        }
        None => {
            for id in &sel.ids {
                writeln!(w, "{id}")?;
            }
        }
    }
    w.flush()?;
    let sizes = pm.model.sizes();
    println!(
        "{} {} over {} tests (sizes {:?}); selected {} for budget {}",
        pm.model.k,
        if pm.grouped { "groups" } else { "clusters" },
        rows.len(),
        sizes,
        sel.ids.len(),
        budget
    );
    Ok(())
}

fn serve(a: ServeArgs) -> Res<()> {
    let space = a.space.load()?;
    let (_, corpus) = load_corpus(&a.corpus)?;
    let listener = TcpListener::bind((a.host.as_str(), a.port)).map_err(|e| format!("{}:{}: {e}", a.host, a.port))?;
    eprintln!("listening on {}", listener.local_addr()?);
    let opts = ServeOptions {
        lockstep: a.lockstep,
        speedup: a.speedup,
        timing: Timing {
            heartbeat_timeout: Duration::from_secs_f64(a.heartbeat_timeout),
            ..Timing::default()
        },
        transcript: a.transcript,
        max_sessions: a.max_sessions,
        thresholds: load_thresholds(a.thresholds.as_deref())?,
        ..ServeOptions::default()
    };
    let report = serve_l2(listener, &corpus, &space, &opts)?;
    let rows: Vec<ProfileRow> = report.completed.iter().map(|o| o.row.clone()).collect();
    if let Some(p) = &a.out {
        let mut w = create(p)?;
        write_profile(&mut w, &rows)?;
        w.flush()?;
    }
    println!(
        "sessions {}; completed {}; aborted {}; pending {}",
        report.sessions,
        report.completed.len(),
        report.aborted.len(),
        report.pending.len()
    );
    print_counts(&rows);
    Ok(())
}

fn ledger(cmd: LedgerCommand) -> Res<ExitCode> {
    let dir_or = |d: Option<PathBuf>| d.unwrap_or_else(|| data_dir().join("ledger"));
    match cmd {
        LedgerCommand::Add { file, dir } => {
            let entry = parse_entry(&read(&file)?)?;
            let path = entry.save(&dir_or(dir))?;
            println!("stored {} at {}", entry.id, path.display());
        }
        LedgerCommand::Gate { id, dir } => {
            let g = ledger_gate(&LedgerEntry::load(&dir_or(dir), &id)?);
            for d in &g.diagnostics {
                println!("! {d}");
            }
            println!("Flight readiness for L3: {}", g.verdict.line());
            if g.verdict == GateVerdict::NotReady {
                return Ok(ExitCode::from(2));
            }
        }
        LedgerCommand::Report { id, dir } => {
            print!("{}", ledger_gate(&LedgerEntry::load(&dir_or(dir), &id)?).text);
        }
        LedgerCommand::SetStatus {
            id,
            mitigation,
            status,
            field_test,
            dir,
        } => {
            let dir = dir_or(dir);
            let mut entry = LedgerEntry::load(&dir, &id)?;
            let status: MitigationStatus = status.parse()?;
            entry.set_status(&mitigation, status, field_test)?;
            entry.save(&dir)?;
            println!("{id} {mitigation} -> {}", status.as_str());
        }
        LedgerCommand::Export { id, dir } => {
            let entry = LedgerEntry::load(&dir_or(dir), &id)?;
            println!("{}", serde_json::to_string_pretty(&entry)?);
        }
        LedgerCommand::List { dir } => {
            for e in LedgerEntry::load_all(&dir_or(dir))? {
                println!("{}\t{}", e.id, ledger_gate(&e).verdict.line());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Res<ExitCode> {
    match cli.command {
        Command::Generate(a) => generate(a)?,
        Command::Blueprint(a) => blueprint(a)?,
        Command::RunL1(a) => run_l1(a)?,
        Command::Analyze(a) => analyze(a)?,
        Command::Downselect(a) => downselect_cmd(a)?,
        Command::ServeL2(a) => serve(a)?,
        Command::Ledger(c) => return ledger(c),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hitfuzz: {e}");
            ExitCode::FAILURE
        }
    }
}
