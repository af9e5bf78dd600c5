use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{BugMapError, IssueRegistry};

/// Rules that decide which integers in a commit message are issue IDs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_id: u64,
    /// Inclusive `[lo, hi]` ranges never accepted as IDs.
    pub excluded_intervals: Vec<[u64; 2]>,
    /// Regexes tried in order; capture group 1 is the ID.
    pub patterns: Vec<String>,
    /// Also accept any standalone integer token after the patterns.
    pub bare_integers: bool,
    /// Only accept issues whose registry release tag equals the ledger's release.
    pub same_release_only: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_id: 1,
            excluded_intervals: Vec::new(),
            patterns: vec![
                r"(?i)\bbug\s*#?\s*(\d+)".into(),
                r"(?i)\bfix(?:ed|es)?\s*(?:bug\s*)?#?\s*(\d+)".into(),
                r"(?i)\bissue\s*#?\s*(\d+)".into(),
            ],
            bare_integers: true,
            same_release_only: false,
        }
    }
}

impl FilterConfig {
    pub fn compile(&self) -> Result<IssueFilter, BugMapError> {
        if self.min_id == 0 {
            return Err(BugMapError::Config("min_id must be positive".into()));
        }
        if let Some([lo, hi]) = self.excluded_intervals.iter().find(|[lo, hi]| lo > hi) {
            return Err(BugMapError::Config(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        let patterns = self
            .patterns
            .iter()
            .map(|p| {
                let re = Regex::new(p).map_err(|e| BugMapError::Config(format!("pattern {p:?}: {e}")))?;
                if re.captures_len() < 2 {
                    return Err(BugMapError::Config(format!("pattern {p:?} has no capture group")));
                }
                Ok(re)
            })
            .collect::<Result<_, _>>()?;
        Ok(IssueFilter {
            config: self.clone(),
            patterns,
            bare: Regex::new(r"\b\d+\b").expect("static regex"),
        })
    }
}

/// Compiled [`FilterConfig`].
#[derive(Debug, Clone)]
pub struct IssueFilter {
    config: FilterConfig,
    patterns: Vec<Regex>,
    bare: Regex,
}

impl IssueFilter {
    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn same_release_only(&self) -> bool {
        self.config.same_release_only
    }

    fn accepts(&self, id: u64, registry: &IssueRegistry) -> bool {
        id > 0
            && id >= self.config.min_id
            && registry.contains(id)
            && !self.config.excluded_intervals.iter().any(|[lo, hi]| *lo <= id && id <= *hi)
    }

    /// Issue IDs cited by `message`; always a subset of the registry.
    pub fn extract(&self, message: &str, registry: &IssueRegistry) -> BTreeSet<u64> {
        let mut found = BTreeSet::new();
        for re in &self.patterns {
            for caps in re.captures_iter(message) {
                if let Some(id) = caps.get(1).and_then(|m| m.as_str().parse::<u64>().ok()) {
                    if self.accepts(id, registry) {
                        found.insert(id);
                    }
                }
            }
        }
        if self.config.bare_integers {
            for m in self.bare.find_iter(message) {
                if let Ok(id) = m.as_str().parse::<u64>() {
                    if self.accepts(id, registry) {
                        found.insert(id);
                    }
                }
            }
        }
        found
    }
}

/// One-shot form of [`IssueFilter::extract`].
pub fn extract_issue_refs(
    message: &str,
    registry: &IssueRegistry,
    cfg: &FilterConfig,
) -> Result<BTreeSet<u64>, BugMapError> {
    Ok(cfg.compile()?.extract(message, registry))
}
