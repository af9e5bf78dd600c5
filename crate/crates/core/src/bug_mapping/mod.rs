//! Issue references in commit messages, mapped onto compilation units.
//!
//! A CU is hit by an issue when a commit whose message cites that issue
//! touches the file. Every positive integer in a message is a candidate ID;
//! candidates survive only if the issue tracker knows them, they reach
//! `min_id` and they fall in no excluded interval. An (issue, CU) pair is
//! counted once per release no matter how many commits repeat it.

mod commit_log;
mod filter;
mod registry;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use commit_log::{parse_commit_log, read_commit_log, write_commit_log, CommitEntry};
pub use filter::{extract_issue_refs, FilterConfig, IssueFilter};
pub use registry::{load_registry, read_registry, IssueMeta, IssueRegistry};

#[derive(Debug, thiserror::Error)]
pub enum BugMapError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// `record` is 1-based.
    #[error("{file}: record {record}: {message}")]
    Format { file: String, record: usize, message: String },
    #[error("invalid filter config: {0}")]
    Config(String),
}

/// Inclusive time window `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl ReleaseWindow {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Option<Self> {
        (start <= end).then_some(Self { start, end })
    }

    pub fn contains(&self, t: &DateTime<Utc>) -> bool {
        self.start <= *t && *t <= self.end
    }
}

/// Issue/CU links of one release and the two counts derived from them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugLedger {
    pub release: String,
    pub links: BTreeSet<(u64, String)>,
    pub bugs_per_cu: BTreeMap<String, u32>,
    pub cus_per_bug: BTreeMap<u64, u32>,
}

impl BugLedger {
    pub fn from_links(release: impl Into<String>, links: BTreeSet<(u64, String)>) -> Self {
        let mut bugs_per_cu: BTreeMap<String, u32> = BTreeMap::new();
        let mut cus_per_bug: BTreeMap<u64, u32> = BTreeMap::new();
        for (id, path) in &links {
            *bugs_per_cu.entry(path.clone()).or_default() += 1;
            *cus_per_bug.entry(*id).or_default() += 1;
        }
        BugLedger { release: release.into(), links, bugs_per_cu, cus_per_bug }
    }

    /// Bug count of a CU; zero when it was never hit.
    pub fn bugs(&self, path: &str) -> u32 {
        self.bugs_per_cu.get(path).copied().unwrap_or(0)
    }

    /// Keeps only links to the given CUs (e.g. files of the analysed corpus).
    pub fn restricted_to<'a>(&self, paths: impl IntoIterator<Item = &'a String>) -> Self {
        let keep: BTreeSet<&String> = paths.into_iter().collect();
        let links = self.links.iter().filter(|(_, p)| keep.contains(p)).cloned().collect();
        Self::from_links(self.release.clone(), links)
    }

    pub fn write_bugs_per_cu<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        w.write_record(["path", "bugs"])?;
        for (p, n) in &self.bugs_per_cu {
            w.write_record([p.as_str(), &n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_cus_per_bug<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        w.write_record(["issue", "cus"])?;
        for (id, n) in &self.cus_per_bug {
            w.write_record([id.to_string(), n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_links<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        w.write_record(["issue", "path"])?;
        for (id, p) in &self.links {
            w.write_record([id.to_string(), p.clone()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the ledger of one release from the commits inside `window`.
pub fn build_bug_ledger(
    commits: &[CommitEntry],
    registry: &IssueRegistry,
    filter: &IssueFilter,
    window: &ReleaseWindow,
    release: &str,
) -> BugLedger {
    let scoped;
    let registry = if filter.same_release_only() {
        scoped = registry.for_release(release);
        &scoped
    } else {
        registry
    };
    let mut links = BTreeSet::new();
    for c in commits.iter().filter(|c| window.contains(&c.timestamp)) {
        for id in filter.extract(&c.message, registry) {
            for f in &c.files {
                links.insert((id, f.clone()));
            }
        }
    }
    BugLedger::from_links(release, links)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(day: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, day, 12, 0, 0).unwrap()
    }

    fn commit(day: u32, msg: &str, files: &[&str]) -> CommitEntry {
        CommitEntry {
            timestamp: ts(day),
            author: "dev".into(),
            message: msg.into(),
            files: files.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn registry(ids: &[u64]) -> IssueRegistry {
        IssueRegistry::from_ids(ids.iter().copied(), "r1")
    }

    fn window() -> ReleaseWindow {
        ReleaseWindow::new(ts(1), ts(31)).unwrap()
    }

    fn default_filter() -> IssueFilter {
        FilterConfig::default().compile().unwrap()
    }

    #[test]
    fn no_fixing_commits_gives_empty_ledger() {
        let commits = vec![commit(2, "refactor", &["a"])];
        let l = build_bug_ledger(&commits, &registry(&[500]), &default_filter(), &window(), "r1");
        assert!(l.links.is_empty() && l.bugs_per_cu.is_empty() && l.cus_per_bug.is_empty());
        assert_eq!(l.bugs("a"), 0);
    }

    #[test]
    fn one_commit_two_files() {
        let commits = vec![commit(2, "Fixed 500", &["a", "b"])];
        let l = build_bug_ledger(&commits, &registry(&[500]), &default_filter(), &window(), "r1");
        assert_eq!(l.bugs_per_cu, BTreeMap::from([("a".into(), 1), ("b".into(), 1)]));
        assert_eq!(l.cus_per_bug, BTreeMap::from([(500, 2)]));
    }

    #[test]
    fn repeated_pair_counts_once() {
        let commits = vec![commit(2, "Fixed 500", &["a"]), commit(3, "bug #500 again", &["a"])];
        let l = build_bug_ledger(&commits, &registry(&[500]), &default_filter(), &window(), "r1");
        assert_eq!(l.bugs("a"), 1);
        assert_eq!(l.links.len(), 1);
    }

    #[test]
    fn commits_outside_window_are_ignored() {
        let commits = vec![commit(2, "Fixed 500", &["a"])];
        let narrow = ReleaseWindow::new(ts(3), ts(4)).unwrap();
        let l = build_bug_ledger(&commits, &registry(&[500]), &default_filter(), &narrow, "r1");
        assert!(l.links.is_empty());
    }

    #[test]
    fn window_is_inclusive_and_ordered() {
        let w = ReleaseWindow::new(ts(2), ts(2)).unwrap();
        assert!(w.contains(&ts(2)));
        assert!(ReleaseWindow::new(ts(3), ts(2)).is_none());
    }

    #[test]
    fn same_release_only_scopes_registry() {
        let mut reg = registry(&[500]);
        reg.insert(600, IssueMeta { open_date: None, release_tag: "r2".into() });
        let cfg = FilterConfig { same_release_only: true, ..FilterConfig::default() };
        let commits = vec![commit(2, "Fixed 500 and 600", &["a"])];
        let l = build_bug_ledger(&commits, &reg, &cfg.compile().unwrap(), &window(), "r1");
        assert_eq!(l.cus_per_bug.keys().copied().collect::<Vec<_>>(), vec![500]);
    }

    #[test]
    fn restriction_keeps_identities() {
        let commits = vec![commit(2, "Fixed 500", &["a", "README"])];
        let l = build_bug_ledger(&commits, &registry(&[500]), &default_filter(), &window(), "r1");
        let r = l.restricted_to([&"a".to_string()]);
        assert_eq!(r.cus_per_bug[&500], 1);
        assert_eq!(r.bugs_per_cu.values().sum::<u32>(), r.cus_per_bug.values().sum::<u32>());
    }
}
