use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("ledger entry: {0}")]
    Parse(String),
    #[error("ledger entry {0} not found")]
    NotFound(String),
    #[error("no mitigation {0} in entry")]
    NoSuchMitigation(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criticality {
    #[serde(rename = "LOW")]
    Low,
    #[serde(rename = "MED", alias = "MEDIUM")]
    Med,
    #[serde(rename = "HIGH")]
    High,
}

impl Criticality {
    pub fn as_str(self) -> &'static str {
        match self {
            Criticality::Low => "LOW",
            Criticality::Med => "MED",
            Criticality::High => "HIGH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MitigationKind {
    Immediate,
    #[serde(rename = "Long-Term", alias = "LongTerm")]
    LongTerm,
}

impl MitigationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MitigationKind::Immediate => "Immediate",
            MitigationKind::LongTerm => "Long-Term",
        }
    }
}

/// Ordered from least to most advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MitigationStatus {
    OnHold,
    BackLogged,
    Completed,
    Passed,
}

impl MitigationStatus {
    pub const ALL: [MitigationStatus; 4] = [
        MitigationStatus::OnHold,
        MitigationStatus::BackLogged,
        MitigationStatus::Completed,
        MitigationStatus::Passed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MitigationStatus::OnHold => "on-hold",
            MitigationStatus::BackLogged => "back-logged",
            MitigationStatus::Completed => "completed",
            MitigationStatus::Passed => "passed",
        }
    }

    pub fn is_done(self) -> bool {
        matches!(self, MitigationStatus::Completed | MitigationStatus::Passed)
    }
}

impl std::str::FromStr for MitigationStatus {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        MitigationStatus::ALL
            .into_iter()
            .find(|m| m.as_str() == norm || m.as_str().replace('-', "") == norm)
            .ok_or_else(|| LedgerError::Parse(format!("unknown mitigation status {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mitigation {
    pub kind: MitigationKind,
    pub description: String,
    /// Status of the mitigation in simulation with humans.
    pub status: MitigationStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_test: Option<MitigationStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootCause {
    pub description: String,
    pub criticality: Criticality,
    #[serde(default)]
    pub mitigations: Vec<Mitigation>,
}

/// One analyzed failure and the work done about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    pub id: String,
    pub failure: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub observed: String,
    #[serde(default)]
    pub tests: Vec<String>,
    #[serde(default)]
    pub root_causes: Vec<RootCause>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateVerdict {
    Ready,
    NotReady,
}

impl GateVerdict {
    pub fn line(self) -> &'static str {
        match self {
            GateVerdict::Ready => "READY FOR FIELD-TESTING",
            GateVerdict::NotReady => "NOT READY FOR FIELD-TESTING",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub verdict: GateVerdict,
    pub diagnostics: Vec<String>,
    pub text: String,
}

pub fn parse_entry(text: &str) -> Result<LedgerEntry, LedgerError> {
    toml::from_str(text).map_err(|e| LedgerError::Parse(e.to_string()))
}

impl LedgerEntry {
    /// Highest root-cause criticality.
    pub fn criticality(&self) -> Option<Criticality> {
        self.root_causes.iter().map(|r| r.criticality).max()
    }

    pub fn mitigations(&self) -> impl Iterator<Item = &Mitigation> {
        self.root_causes.iter().flat_map(|r| &r.mitigations)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("ledger entry serializes")
    }

    /// Sets a mitigation addressed as "cause.mitigation", both 1-based.
    pub fn set_status(&mut self, path: &str, status: MitigationStatus, field_test: bool) -> Result<(), LedgerError> {
        let missing = || LedgerError::NoSuchMitigation(path.to_string());
        let (c, m) = path.split_once('.').ok_or_else(missing)?;
        let c: usize = c.parse().map_err(|_| missing())?;
        let m: usize = m.parse().map_err(|_| missing())?;
        let mit = self
            .root_causes
            .get_mut(c.wrapping_sub(1))
            .and_then(|r| r.mitigations.get_mut(m.wrapping_sub(1)))
            .ok_or_else(missing)?;
        if field_test {
            mit.field_test = Some(status);
        } else {
            mit.status = status;
        }
        Ok(())
    }

    pub fn path_in(dir: &Path, id: &str) -> PathBuf {
        let safe: String = id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_') { c } else { '_' })
            .collect();
        dir.join(format!("{safe}.toml"))
    }

    pub fn load(dir: &Path, id: &str) -> Result<LedgerEntry, LedgerError> {
        let path = LedgerEntry::path_in(dir, id);
        match std::fs::read_to_string(&path) {
            Ok(text) => parse_entry(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(LedgerError::NotFound(id.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf, LedgerError> {
        std::fs::create_dir_all(dir)?;
        let path = LedgerEntry::path_in(dir, &self.id);
        std::fs::write(&path, self.to_toml())?;
        Ok(path)
    }

    /// Every entry in a ledger directory, by id.
    pub fn load_all(dir: &Path) -> Result<Vec<LedgerEntry>, LedgerError> {
        let mut out = Vec::new();
        for e in std::fs::read_dir(dir)? {
            let p = e?.path();
            if p.extension().is_some_and(|x| x == "toml") {
                out.push(parse_entry(&std::fs::read_to_string(&p)?)?);
            }
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }
}

fn wrap(text: &str, width: usize) -> Vec<String> {
    let mut lines = Vec::new();
    let mut cur = String::new();
    for word in text.split_whitespace() {
        if !cur.is_empty() && cur.len() + 1 + word.len() > width {
            lines.push(std::mem::take(&mut cur));
        }
        if !cur.is_empty() {
            cur.push(' ');
        }
        cur.push_str(word);
    }
    if !cur.is_empty() || lines.is_empty() {
        lines.push(cur);
    }
    lines
}

const CAUSE_W: usize = 36;
const MIT_W: usize = 44;

fn render(entry: &LedgerEntry, verdict: GateVerdict, diagnostics: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Ledger entry {}", entry.id);
    let _ = writeln!(s, "Observed failure: {}", entry.failure);
    if !entry.observed.is_empty() {
        let _ = writeln!(s, "  {}", entry.observed);
    }
    if !entry.tests.is_empty() {
        let _ = writeln!(s, "Linked tests: {}", entry.tests.join(", "));
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<w1$}  {:<5}  {:<w2$}  {:<11}  {}",
        "Root cause",
        "Crit.",
        "Mitigation",
        "L2 status",
        "Field test",
        w1 = CAUSE_W + 3,
        w2 = MIT_W
    );
    for (ci, cause) in entry.root_causes.iter().enumerate() {
        let cause_lines = wrap(&format!("{}. {}", ci + 1, cause.description), CAUSE_W + 3);
        let mut right: Vec<(String, String, String)> = Vec::new();
        for m in &cause.mitigations {
            for (li, l) in wrap(&format!("{}: {}", m.kind.as_str(), m.description), MIT_W).into_iter().enumerate() {
                if li == 0 {
                    right.push((
                        l,
                        m.status.as_str().to_string(),
                        m.field_test.map(|f| f.as_str().to_string()).unwrap_or_default(),
                    ));
                } else {
                    right.push((l, String::new(), String::new()));
                }
            }
        }
        if right.is_empty() {
            right.push(("(none)".into(), String::new(), String::new()));
        }
        for row in 0..cause_lines.len().max(right.len()) {
            let left = cause_lines.get(row).map(String::as_str).unwrap_or("");
            let crit = if row == 0 { cause.criticality.as_str() } else { "" };
            let (m, st, ft) = right.get(row).cloned().unwrap_or_default();
            let line = format!(
                "{:<w1$}  {:<5}  {:<w2$}  {:<11}  {}",
                left,
                crit,
                m,
                st,
                ft,
                w1 = CAUSE_W + 3,
                w2 = MIT_W
            );
            let _ = writeln!(s, "{}", line.trim_end());
        }
    }
    for d in diagnostics {
        let _ = writeln!(s, "! {d}");
    }
    let _ = writeln!(s, "Flight readiness for L3: {}", verdict.line());
    s
}

/// Ready only when at least one mitigation exists and every mitigation is completed or passed.
pub fn ledger_gate(entry: &LedgerEntry) -> GateReport {
    let mut diagnostics = Vec::new();
    if entry.mitigations().next().is_none() {
        diagnostics.push("no mitigations recorded".to_string());
    }
    for (ci, cause) in entry.root_causes.iter().enumerate() {
        for (mi, m) in cause.mitigations.iter().enumerate() {
            if !m.status.is_done() {
                diagnostics.push(format!(
                    "mitigation {}.{} ({}) is {}",
                    ci + 1,
                    mi + 1,
                    m.kind.as_str(),
                    m.status.as_str()
                ));
            }
        }
    }
    let verdict = if diagnostics.is_empty() {
        GateVerdict::Ready
    } else {
        GateVerdict::NotReady
    };
    GateReport {
        verdict,
        text: render(entry, verdict, &diagnostics),
        diagnostics,
    }
}
