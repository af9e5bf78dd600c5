//! JSON-lines facts files: one [`CuFacts`] record per line.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::CuFacts;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    /// `record` is the 1-based line number of the offending record.
    #[error("record {record}: {message}")]
    Record { record: usize, message: String },
}

impl FormatError {
    fn record(record: usize, message: impl Into<String>) -> Self {
        FormatError::Record { record, message: message.into() }
    }
}

/// Parses facts records from text. Blank lines are ignored.
pub fn read_facts(text: &str) -> Result<Vec<CuFacts>, FormatError> {
    let mut out = Vec::new();
    let mut paths = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let record = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cu: CuFacts =
            serde_json::from_str(line).map_err(|e| FormatError::record(record, e.to_string()))?;
        if cu.path.is_empty() {
            return Err(FormatError::record(record, "empty path"));
        }
        if cu.classes.is_empty() {
            return Err(FormatError::record(record, format!("{} declares no classes", cu.path)));
        }
        let mut names = HashSet::new();
        for c in &cu.classes {
            if !names.insert(c.name.as_str()) {
                return Err(FormatError::record(
                    record,
                    format!("duplicate class {} in {}", c.name, cu.path),
                ));
            }
        }
        if !paths.insert(cu.path.clone()) {
            return Err(FormatError::record(record, format!("duplicate path {}", cu.path)));
        }
        out.push(cu);
    }
    Ok(out)
}

pub fn load_facts_file(path: &Path) -> Result<Vec<CuFacts>, FormatError> {
    let text = fs::read_to_string(path)
        .map_err(|source| FormatError::Io { path: path.display().to_string(), source })?;
    read_facts(&text)
}

/// Writes one JSON record per CU, in the given order.
pub fn write_facts<W: Write>(mut out: W, corpus: &[CuFacts]) -> io::Result<()> {
    for cu in corpus {
        serde_json::to_writer(&mut out, cu)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
