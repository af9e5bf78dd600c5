//! Normalized commit log: one record per line,
//! `timestamp TAB author TAB message TAB file;file;...`.
//!
//! Timestamps are RFC 3339. In author and message, `\t`, `\n`, `\r` and `\\`
//! are escaped.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::BugMapError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitEntry {
    pub timestamp: DateTime<Utc>,
    pub author: String,
    pub message: String,
    pub files: Vec<String>,
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\\' => out.push_str("\\\\"),
            _ => out.push(c),
        }
    }
    out
}

/// Parses log text. Blank lines are skipped but still counted as records
/// for error positions.
pub fn read_commit_log(text: &str, file: &str) -> Result<Vec<CommitEntry>, BugMapError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let record = idx + 1;
        let bad = |message: String| BugMapError::Format { file: file.to_string(), record, message };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        let timestamp = DateTime::parse_from_rfc3339(fields[0].trim())
            .map_err(|e| bad(format!("bad timestamp {:?}: {e}", fields[0])))?
            .with_timezone(&Utc);
        let author = unescape(fields[1]).map_err(bad)?;
        let message = unescape(fields[2]).map_err(bad)?;
        let files: Vec<String> = fields[3]
            .split(';')
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .map(String::from)
            .collect();
        if files.is_empty() {
            return Err(bad("missing file list".into()));
        }
        out.push(CommitEntry { timestamp, author, message, files });
    }
    Ok(out)
}

pub fn parse_commit_log(path: &Path) -> Result<Vec<CommitEntry>, BugMapError> {
    let text = fs::read_to_string(path)
        .map_err(|source| BugMapError::Io { path: path.display().to_string(), source })?;
    read_commit_log(&text, &path.display().to_string())
}

pub fn write_commit_log<W: Write>(mut out: W, commits: &[CommitEntry]) -> io::Result<()> {
    for c in commits {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            c.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            escape(&c.author),
            escape(&c.message),
            c.files.join(";")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_log() {
        assert!(read_commit_log("", "log").unwrap().is_empty());
    }

    #[test]
    fn missing_file_list_is_an_error() {
        let err = read_commit_log("2024-01-01T00:00:00Z\tann\tFixed 1\t\n", "log").unwrap_err();
        assert!(matches!(err, BugMapError::Format { record: 1, .. }));
        let err = read_commit_log("2024-01-01T00:00:00Z\tann\tFixed 1\n", "log").unwrap_err();
        assert!(matches!(err, BugMapError::Format { record: 1, .. }));
    }

    #[test]
    fn error_reports_the_failing_record_only() {
        let text = "2024-01-01T00:00:00Z\ta\tm\tx.java\nnot-a-date\ta\tm\tx.java\n";
        match read_commit_log(text, "log") {
            Err(BugMapError::Format { record, .. }) => assert_eq!(record, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn escapes_are_decoded() {
        let text = "2024-01-01T10:00:00+02:00\tann\tline1\\nline2\\tend\\\\\ta.java; b.java\n";
        let c = &read_commit_log(text, "log").unwrap()[0];
        assert_eq!(c.message, "line1\nline2\tend\\");
        assert_eq!(c.files, vec!["a.java", "b.java"]);
        assert_eq!(c.timestamp.to_rfc3339(), "2024-01-01T08:00:00+00:00");
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(
            msg in "[ -~\t\n\\\\]{0,40}",
            author in "[a-z \\\\]{1,10}",
            files in proptest::collection::vec("[a-z/]{1,8}\\.java", 1..4),
            secs in 0i64..2_000_000_000,
        ) {
            let c = CommitEntry {
                timestamp: DateTime::from_timestamp(secs, 0).unwrap(),
                author,
                message: msg,
                files,
            };
            let mut buf = Vec::new();
            write_commit_log(&mut buf, std::slice::from_ref(&c)).unwrap();
            let back = read_commit_log(std::str::from_utf8(&buf).unwrap(), "log").unwrap();
            prop_assert_eq!(back, vec![c]);
        }
    }
}
