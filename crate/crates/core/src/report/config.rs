use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::bug_mapping::{FilterConfig, ReleaseWindow};

use super::{PipelineError, Stage};

/// Pipeline settings, read from TOML. Relative paths are resolved against
/// the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub commit_log: PathBuf,
    pub registry: PathBuf,
    #[serde(default)]
    pub filter: FilterConfig,
    /// Prefix removed from commit-log file paths so they match corpus paths.
    #[serde(default)]
    pub strip_prefix: Option<String>,
    /// Continue past files the parser rejects instead of failing the run.
    #[serde(default)]
    pub tolerate_parse_errors: bool,
    #[serde(rename = "release")]
    pub releases: Vec<ReleaseConfig>,
    #[serde(default, rename = "pair")]
    pub pairs: Vec<PairConfig>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReleaseConfig {
    pub tag: String,
    /// Directory of `.java` files, or a `.jsonl` facts file.
    pub corpus: PathBuf,
    /// Bug window, inclusive at both ends.
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
}

impl ReleaseConfig {
    pub fn window(&self) -> ReleaseWindow {
        ReleaseWindow::new(self.window_start, self.window_end).expect("checked at load")
    }
}

/// Two consecutive releases, compared in the evolution stage.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub prev: String,
    pub next: String,
}

impl PairConfig {
    pub fn label(&self) -> String {
        format!("{}->{}", self.prev, self.next)
    }
}

fn config_err(message: String) -> PipelineError {
    PipelineError::input(Stage::Config, message)
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.out);
        join(&mut self.commit_log);
        join(&mut self.registry);
        for r in &mut self.releases {
            join(&mut r.corpus);
        }
    }

    /// Structural checks; file existence is checked per stage at run start.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.releases.is_empty() {
            return Err(config_err("no releases configured".into()));
        }
        let mut tags = BTreeSet::new();
        for r in &self.releases {
            if r.tag.is_empty() || r.tag.contains(['/', '\\']) || r.tag == "." || r.tag == ".." {
                return Err(config_err(format!("release tag {:?} is not usable as a directory name", r.tag)));
            }
            if !tags.insert(r.tag.as_str()) {
                return Err(config_err(format!("release {} listed twice", r.tag)));
            }
            if r.window_start > r.window_end {
                return Err(config_err(format!("release {}: window starts after it ends", r.tag)));
            }
        }
        for p in &self.pairs {
            for end in [&p.prev, &p.next] {
                if !tags.contains(end.as_str()) {
                    return Err(config_err(format!("pair {} names unknown release {end}", p.label())));
                }
            }
            if p.prev == p.next {
                return Err(config_err(format!("pair {} compares a release with itself", p.label())));
            }
        }
        self.filter.compile().map_err(|e| config_err(e.to_string()))?;
        Ok(())
    }

    pub fn release(&self, tag: &str) -> Option<&ReleaseConfig> {
        self.releases.iter().find(|r| r.tag == tag)
    }
}
