use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{parse_test, FuzzSpace, FuzzTest};

use super::ScenarioConstraint;

const MAGIC: &str = "#HITFUZZ-CORPUS";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// First line of a corpus file. Records how the tests were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub version: u32,
    pub generator: String,
    pub space_sha256: String,
    pub constraint: ScenarioConstraint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_delay_s: Option<f64>,
    pub count: u64,
}

impl CorpusHeader {
    pub fn new(generator: &str, space: &FuzzSpace, constraint: &ScenarioConstraint, count: u64) -> Self {
        CorpusHeader {
            version: 1,
            generator: generator.to_string(),
            space_sha256: space_digest(space),
            constraint: constraint.clone(),
            seed: None,
            max_delay_s: None,
            count,
        }
    }
}

/// SHA-256 of the space's canonical JSON.
pub fn space_digest(space: &FuzzSpace) -> String {
    let canon = serde_json::to_string(space).expect("space serializes");
    let digest = Sha256::digest(canon.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_corpus_header<W: Write>(mut w: W, header: &CorpusHeader) -> std::io::Result<()> {
    writeln!(w, "{MAGIC} {}", serde_json::to_string(header).expect("header serializes"))
}

/// Header line followed by one compact test document per line.
pub fn write_corpus<'a, W: Write>(
    mut w: W,
    header: &CorpusHeader,
    tests: impl IntoIterator<Item = &'a FuzzTest>,
) -> std::io::Result<()> {
    write_corpus_header(&mut w, header)?;
    for t in tests {
        writeln!(w, "{}", t.to_json())?;
    }
    Ok(())
}

/// Reads a corpus file. The header is optional so hand-written test lists load too.
pub fn read_corpus<R: BufRead>(r: R) -> Result<(Option<CorpusHeader>, Vec<FuzzTest>), CorpusError> {
    let mut header = None;
    let mut tests = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix(MAGIC) {
            if i != 0 {
                return Err(CorpusError::Format {
                    line: i + 1,
                    message: "header must be the first line".into(),
                });
            }
            header = Some(serde_json::from_str(rest.trim()).map_err(|e| CorpusError::Format {
                line: 1,
                message: e.to_string(),
            })?);
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        tests.push(parse_test(trimmed).map_err(|e| CorpusError::Format {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok((header, tests))
}
