use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::BugMapError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueMeta {
    pub open_date: Option<NaiveDate>,
    pub release_tag: String,
}

/// Issue IDs known to the tracker. All IDs are positive.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRegistry {
    issues: BTreeMap<u64, IssueMeta>,
}

impl IssueRegistry {
    pub fn from_ids(ids: impl IntoIterator<Item = u64>, release_tag: &str) -> Self {
        let issues = ids
            .into_iter()
            .filter(|&id| id > 0)
            .map(|id| (id, IssueMeta { open_date: None, release_tag: release_tag.to_string() }))
            .collect();
        IssueRegistry { issues }
    }

    /// Adds or replaces an issue. Zero is not a valid ID and is ignored.
    pub fn insert(&mut self, id: u64, meta: IssueMeta) {
        if id > 0 {
            self.issues.insert(id, meta);
        }
    }

    pub fn contains(&self, id: u64) -> bool {
        self.issues.contains_key(&id)
    }

    pub fn get(&self, id: u64) -> Option<&IssueMeta> {
        self.issues.get(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.issues.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.issues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn for_release(&self, tag: &str) -> Self {
        let issues =
            self.issues.iter().filter(|(_, m)| m.release_tag == tag).map(|(k, v)| (*k, v.clone())).collect();
        IssueRegistry { issues }
    }
}

/// Reads a tab-separated registry with header `id open_date release_tag`.
/// `open_date` is `YYYY-MM-DD` or empty.
pub fn read_registry(text: &str, file: &str) -> Result<IssueRegistry, BugMapError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |record: usize, message: String| BugMapError::Format { file: file.to_string(), record, message };
    let headers = rdr.headers().map_err(|e| bad(0, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id_col), Some(date_col), Some(tag_col)) = (col("id"), col("open_date"), col("release_tag"))
    else {
        return Err(bad(0, "header must name id, open_date and release_tag".into()));
    };

    let mut reg = IssueRegistry::default();
    for (idx, row) in rdr.records().enumerate() {
        let record = idx + 1;
        let row = row.map_err(|e| bad(record, e.to_string()))?;
        let field = |c: usize| row.get(c).unwrap_or("");
        let id: u64 = field(id_col)
            .parse()
            .map_err(|_| bad(record, format!("issue id {:?} is not a positive integer", field(id_col))))?;
        if id == 0 {
            return Err(bad(record, "issue id must be positive".into()));
        }
        let open_date = match field(date_col) {
            "" => None,
            d => Some(
                NaiveDate::parse_from_str(d, "%Y-%m-%d")
                    .map_err(|e| bad(record, format!("bad open_date {d:?}: {e}")))?,
            ),
        };
        if reg.contains(id) {
            return Err(bad(record, format!("duplicate issue id {id}")));
        }
        reg.insert(id, IssueMeta { open_date, release_tag: field(tag_col).to_string() });
    }
    Ok(reg)
}

pub fn load_registry(path: &Path) -> Result<IssueRegistry, BugMapError> {
    let text = fs::read_to_string(path)
        .map_err(|source| BugMapError::Io { path: path.display().to_string(), source })?;
    read_registry(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows() {
        let reg = read_registry("id\topen_date\trelease_tag\n141181\t2006-05-02\t3.2\n7\t\t3.3\n", "r").unwrap();
        assert_eq!(reg.ids().collect::<Vec<_>>(), vec![7, 141181]);
        assert_eq!(reg.get(141181).unwrap().open_date, NaiveDate::from_ymd_opt(2006, 5, 2));
        assert_eq!(reg.for_release("3.3").ids().collect::<Vec<_>>(), vec![7]);
    }

    #[test]
    fn rejects_zero_and_duplicates() {
        assert!(read_registry("id\topen_date\trelease_tag\n0\t\tx\n", "r").is_err());
        assert!(read_registry("id\topen_date\trelease_tag\n5\t\tx\n5\t\tx\n", "r").is_err());
        assert!(read_registry("id\trelease_tag\n5\tx\n", "r").is_err());
    }
}
