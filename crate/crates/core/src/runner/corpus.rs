use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::model::{FuzzSpace, FuzzTest, Wind};
use crate::oracle::{classify, extract_features, ProfileRow, TestOutcomeKind, Thresholds};
use crate::simulator::{FlightLog, SimParams};

use super::{execute_test, ExecOptions, ProxyHuman, RunError, TestExecution, Unpaced};

/// One blueprint log per (mission, wind) pair.
#[derive(Debug, Clone, Default)]
pub struct Blueprints {
    logs: BTreeMap<(String, String), FlightLog>,
}

impl Blueprints {
    pub fn get(&self, mission: &str, wind: Wind) -> Option<&FlightLog> {
        self.logs.get(&(mission.to_string(), wind.label()))
    }

    pub fn insert(&mut self, log: FlightLog) {
        self.logs.insert((log.mission.clone(), log.wind.clone()), log);
    }

    pub fn iter(&self) -> impl Iterator<Item = &FlightLog> {
        self.logs.values()
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    /// Blueprint with this mission id and wind label, or the only blueprint when there is one.
    pub fn lookup(&self, mission: &str, wind_label: &str) -> Option<&FlightLog> {
        self.logs
            .get(&(mission.to_string(), wind_label.to_string()))
            .or_else(|| (self.logs.len() == 1).then(|| self.logs.values().next()).flatten())
    }
}

/// Zero-HIT run with the fence off and the throttle at neutral.
pub fn blueprint_for(space: &FuzzSpace, mission: &str, wind: Wind, params: SimParams) -> Result<FlightLog, RunError> {
    let test = FuzzTest::nominal(format!("BLUEPRINT-{mission}"), mission, wind);
    let opts = ExecOptions {
        params,
        ..Default::default()
    };
    Ok(execute_test(&test, space, &mut ProxyHuman::new(), &mut Unpaced, &opts)?.log)
}

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub parallelism: usize,
    pub exec: ExecOptions,
    pub thresholds: Thresholds,
    pub proxy_latency: f64,
    /// Each test's FlightLog is written here as `<test id>.log` when set.
    pub log_dir: Option<PathBuf>,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            parallelism: 1,
            exec: ExecOptions::default(),
            thresholds: Thresholds::default(),
            proxy_latency: 0.0,
            log_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusResult {
    pub rows: Vec<ProfileRow>,
    pub blueprints: Blueprints,
}

/// File name for a test's log.
pub fn log_file_name(test_id: &str) -> String {
    let safe: String = test_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    format!("{safe}.log")
}

/// Scores an execution against its blueprint.
pub fn evaluate(test: &FuzzTest, exec: &TestExecution, blueprint: &FlightLog, thresholds: &Thresholds) -> ProfileRow {
    let mut record = match extract_features(&test.test_id, &exec.log, blueprint) {
        Ok(r) => r,
        Err(_) => crate::oracle::OutcomeRecord {
            test_id: test.test_id.clone(),
            max_deviation: 0.0,
            max_altitude: 0.0,
            duration: 0.0,
            landed: false,
            freefall: false,
            mission_complete: false,
            final_disarm: false,
            touchdown_speed: 0.0,
            untested: false,
            label: TestOutcomeKind::Aborted,
        },
    };
    record.untested = exec.untested();
    if exec.aborted.is_some() {
        record.label = TestOutcomeKind::Aborted;
    }
    record.label = classify(&record, thresholds, blueprint.duration());
    ProfileRow::from_test(test, record)
}

fn write_log(dir: &Path, test_id: &str, log: &FlightLog) -> Result<(), RunError> {
    std::fs::write(dir.join(log_file_name(test_id)), log.to_text()).map_err(|e| RunError::Io(e.to_string()))
}

/// Executes every test in an isolated world; rows come back in corpus order.
pub fn run_corpus(corpus: &[FuzzTest], space: &FuzzSpace, opts: &CorpusOptions) -> Result<CorpusResult, RunError> {
    if corpus.is_empty() {
        return Err(RunError::EmptyCorpus);
    }
    let mut blueprints = Blueprints::default();
    for t in corpus {
        let wind = t.environment.wind_or_calm();
        if blueprints.get(&t.mission, wind).is_none() {
            blueprints.insert(blueprint_for(space, &t.mission, wind, opts.exec.params)?);
        }
    }
    if let Some(dir) = &opts.log_dir {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io(e.to_string()))?;
    }

    let run_one = |test: &FuzzTest| -> Result<ProfileRow, RunError> {
        let mut agent = ProxyHuman::with_latency(opts.proxy_latency);
        let exec = execute_test(test, space, &mut agent, &mut Unpaced, &opts.exec)?;
        if let Some(dir) = &opts.log_dir {
            write_log(dir, &test.test_id, &exec.log)?;
        }
        let bp = blueprints
            .get(&test.mission, test.environment.wind_or_calm())
            .expect("blueprint computed above");
        Ok(evaluate(test, &exec, bp, &opts.thresholds))
    };

    let rows = if opts.parallelism <= 1 {
        corpus.iter().map(run_one).collect::<Result<Vec<_>, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.parallelism)
            .build()
            .map_err(|e| RunError::Io(e.to_string()))?;
        pool.install(|| corpus.par_iter().map(run_one).collect::<Result<Vec<_>, _>>())?
    };
    Ok(CorpusResult { rows, blueprints })
}
