//! The analysis pipeline behind the command-line tool: reads a
//! [`PipelineConfig`], runs the stages a command needs and writes plain
//! tab-separated tables plus JSON-lines records under the output directory.
//!
//! Layout of the output directory:
//!
//! ```text
//! <tag>/facts.jsonl  skipped.tsv
//! <tag>/class_edges.tsv  cu_edges.tsv
//! <tag>/metrics.tsv  class_metrics.tsv
//! <tag>/bugs_per_cu.tsv  cus_per_bug.tsv  links.tsv
//! <tag>/ccdf/<quantity>.tsv  fits.jsonl
//! correlations.tsv
//! evolution.tsv  chi_square.tsv  delta_correlation.tsv
//! ```

mod config;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bug_mapping::{build_bug_ledger, load_registry, parse_commit_log, BugLedger, CommitEntry};
use crate::evolution::{
    all_family_stats, classify_cus, delta_metric_correlation, family_significance, write_family_report,
    FamilyRow, ReleaseSnapshot,
};
use crate::metrics_graph::{compute_metrics, export, Metric, SystemMetrics};
use crate::source_facts::{
    load_facts_file, parse_compilation_unit, resolve_type_references, write_facts, CuFacts,
};
use crate::tail_stats::{ccdf, fit_power_law_tail, pearson, write_ccdf, FitMode, StatsError};

pub use config::{PairConfig, PipelineConfig, ReleaseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    SourceFacts,
    MetricsGraph,
    BugMapping,
    TailStats,
    Evolution,
    Output,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::SourceFacts => "source_facts",
            Stage::MetricsGraph => "metrics_graph",
            Stage::BugMapping => "bug_mapping",
            Stage::TailStats => "tail_stats",
            Stage::Evolution => "evolution",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad or missing input; exit code 1.
    Input,
    /// An internal consistency check failed; exit code 2.
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("[{stage}] {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn input(stage: Stage, message: impl Into<String>) -> Self {
        Self { stage, kind: ErrorKind::Input, message: message.into() }
    }

    pub fn invariant(stage: Stage, message: impl Into<String>) -> Self {
        Self { stage, kind: ErrorKind::Invariant, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 1,
            ErrorKind::Invariant => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Extract,
    Graph,
    Metrics,
    Bugs,
    Fit,
    Correlate,
    Evolve,
    /// Every stage.
    Report,
}

/// Narrows a command to one release and/or one metric.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Selection {
    pub release: Option<String>,
    pub metric: Option<Metric>,
}

#[derive(Debug, Clone, Copy)]
struct Outputs {
    facts: bool,
    graph: bool,
    metrics: bool,
    bugs: bool,
    fit: bool,
    correlate: bool,
    evolve: bool,
}

impl Outputs {
    fn of(cmd: Command) -> Self {
        let none = Outputs {
            facts: false,
            graph: false,
            metrics: false,
            bugs: false,
            fit: false,
            correlate: false,
            evolve: false,
        };
        match cmd {
            Command::Extract => Outputs { facts: true, ..none },
            Command::Graph => Outputs { graph: true, ..none },
            Command::Metrics => Outputs { metrics: true, ..none },
            Command::Bugs => Outputs { bugs: true, ..none },
            Command::Fit => Outputs { fit: true, ..none },
            Command::Correlate => Outputs { correlate: true, ..none },
            Command::Evolve => Outputs { evolve: true, ..none },
            Command::Report => Outputs {
                facts: true,
                graph: true,
                metrics: true,
                bugs: true,
                fit: true,
                correlate: true,
                evolve: true,
            },
        }
    }

    fn needs_metrics(&self) -> bool {
        self.graph || self.metrics || self.needs_ledger()
    }

    fn needs_ledger(&self) -> bool {
        self.bugs || self.fit || self.correlate || self.evolve
    }
}

/// A file the parser rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub path: String,
    pub error: String,
}

/// Facts of one release, plus the files that could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedCorpus {
    pub facts: Vec<CuFacts>,
    pub skipped: Vec<Skipped>,
}

/// Reads a corpus: every `.java` file under a directory, or a `.jsonl`
/// facts file. CU paths are relative to the directory, `/`-separated.
pub fn extract_corpus(corpus: &Path) -> Result<ExtractedCorpus, PipelineError> {
    let stage = Stage::SourceFacts;
    if corpus.is_file() {
        let facts = load_facts_file(corpus).map_err(|e| PipelineError::input(stage, e.to_string()))?;
        if facts.is_empty() {
            return Err(PipelineError::input(
                stage,
                format!("no compilation units found in {}", corpus.display()),
            ));
        }
        return Ok(ExtractedCorpus { facts, skipped: Vec::new() });
    }
    if !corpus.is_dir() {
        return Err(PipelineError::input(stage, format!("corpus {} does not exist", corpus.display())));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(corpus).sort_by_file_name() {
        let entry = entry.map_err(|e| PipelineError::input(stage, e.to_string()))?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "java") {
            let rel = entry.path().strip_prefix(corpus).expect("walk stays under root");
            let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
            files.push((rel.join("/"), entry.path().to_path_buf()));
        }
    }
    if files.is_empty() {
        return Err(PipelineError::input(
            stage,
            format!("no compilation units found in {}", corpus.display()),
        ));
    }
    files.sort();
    let mut facts = Vec::new();
    let mut skipped = Vec::new();
    for (rel, full) in files {
        let text = std::fs::read(&full)
            .map_err(|e| PipelineError::input(stage, format!("cannot read {}: {e}", full.display())))?;
        let text = String::from_utf8_lossy(&text);
        match parse_compilation_unit(&text, &rel) {
            Ok(cu) => facts.push(cu),
            Err(e) => skipped.push(Skipped { path: rel, error: e.to_string() }),
        }
    }
    Ok(ExtractedCorpus { facts, skipped })
}

/// Checks the graph identities every metric table must satisfy.
pub fn check_metric_invariants(m: &SystemMetrics) -> Result<(), PipelineError> {
    let ins: u64 = m.cus.values().map(|v| u64::from(v.in_links)).sum();
    let outs: u64 = m.cus.values().map(|v| u64::from(v.out_links)).sum();
    if ins != outs {
        return Err(PipelineError::invariant(
            Stage::MetricsGraph,
            format!("in-link total {ins} differs from out-link total {outs}"),
        ));
    }
    if let Some((path, v)) = m.cus.iter().find(|(_, v)| v.cu_cbo > v.out_links) {
        return Err(PipelineError::invariant(
            Stage::MetricsGraph,
            format!("{path}: cu_cbo {} exceeds out_links {}", v.cu_cbo, v.out_links),
        ));
    }
    Ok(())
}

struct ReleaseRun<'a> {
    cfg: &'a ReleaseConfig,
    metrics: Option<SystemMetrics>,
    ledger: Option<BugLedger>,
}

/// One power-law fit attempt, as written to `fits.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRecord {
    pub release: String,
    pub quantity: String,
    pub n: usize,
    pub mode: FitMode,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_tail: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    out: PathBuf,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, out: Option<PathBuf>) -> Self {
        let out = out.unwrap_or_else(|| cfg.out.clone());
        Self { cfg, out }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn run(&self, cmd: Command, sel: &Selection) -> Result<(), PipelineError> {
        let outputs = Outputs::of(cmd);
        let pairs = self.selected_pairs(sel, outputs)?;
        let releases = self.selected_releases(sel, &pairs)?;
        self.check_paths(&releases, outputs)?;

        let mut runs = Vec::new();
        let mut rejected = Vec::new();
        for rc in &releases {
            let corpus = extract_corpus(&rc.corpus)?;
            log::info!("{}: {} compilation units, {} skipped", rc.tag, corpus.facts.len(), corpus.skipped.len());
            if outputs.facts {
                let dir = self.release_dir(&rc.tag)?;
                write_out(&dir.join("facts.jsonl"), |w| write_facts(w, &corpus.facts).map_err(|e| e.to_string()))?;
                write_out(&dir.join("skipped.tsv"), |w| write_skipped(w, &corpus.skipped))?;
            }
            for s in &corpus.skipped {
                rejected.push(format!("{}: {}: {}", rc.tag, s.path, s.error));
            }
            runs.push((rc, corpus.facts));
        }
        if !rejected.is_empty() && !self.cfg.tolerate_parse_errors {
            return Err(PipelineError::input(
                Stage::SourceFacts,
                format!("{} file(s) could not be parsed:\n  {}", rejected.len(), rejected.join("\n  ")),
            ));
        }
        for r in &rejected {
            log::warn!("skipped {r}");
        }
        if !outputs.needs_metrics() {
            return Ok(());
        }

        let mut runs: Vec<ReleaseRun> = runs
            .into_iter()
            .map(|(cfg, facts)| {
                let m = compute_metrics(&resolve_type_references(&facts));
                check_metric_invariants(&m).map(|_| ReleaseRun { cfg, metrics: Some(m), ledger: None })
            })
            .collect::<Result<_, _>>()?;
        for run in &runs {
            let m = run.metrics.as_ref().expect("computed above");
            if outputs.graph {
                let dir = self.release_dir(&run.cfg.tag)?;
                write_out(&dir.join("class_edges.tsv"), |w| csv_ok(export::write_class_edges(w, &m.class_graph)))?;
                write_out(&dir.join("cu_edges.tsv"), |w| csv_ok(export::write_cu_edges(w, &m.cu_graph)))?;
            }
            if outputs.metrics {
                let dir = self.release_dir(&run.cfg.tag)?;
                write_out(&dir.join("metrics.tsv"), |w| csv_ok(export::write_metrics_table(w, &m.cus)))?;
                write_out(&dir.join("class_metrics.tsv"), |w| csv_ok(export::write_class_metrics(w, &m.classes)))?;
            }
        }
        if !outputs.needs_ledger() {
            return Ok(());
        }

        let commits = self.load_commits()?;
        let registry = load_registry(&self.cfg.registry)
            .map_err(|e| PipelineError::input(Stage::BugMapping, e.to_string()))?;
        let filter = self.cfg.filter.compile().map_err(|e| PipelineError::input(Stage::BugMapping, e.to_string()))?;
        for run in &mut runs {
            let m = run.metrics.as_ref().expect("computed above");
            let full = build_bug_ledger(&commits, &registry, &filter, &run.cfg.window(), &run.cfg.tag);
            let ledger = full.restricted_to(m.cus.keys());
            if outputs.bugs {
                let dir = self.release_dir(&run.cfg.tag)?;
                write_out(&dir.join("bugs_per_cu.tsv"), |w| csv_ok(ledger.write_bugs_per_cu(w)))?;
                write_out(&dir.join("cus_per_bug.tsv"), |w| csv_ok(ledger.write_cus_per_bug(w)))?;
                write_out(&dir.join("links.tsv"), |w| csv_ok(ledger.write_links(w)))?;
            }
            run.ledger = Some(ledger);
        }

        let metrics: Vec<Metric> = match sel.metric {
            Some(m) => vec![m],
            None => Metric::ALL.to_vec(),
        };
        if outputs.fit {
            for run in &runs {
                self.write_fits(run, &metrics)?;
            }
        }
        if outputs.correlate {
            write_out(&self.out.join("correlations.tsv"), |w| write_correlations(w, &runs, &metrics))?;
        }
        if outputs.evolve {
            if pairs.is_empty() {
                log::info!("no release pairs configured; evolution report skipped");
            } else {
                self.write_evolution(&runs, &pairs, &metrics)?;
            }
        }
        Ok(())
    }

    fn selected_pairs(&self, sel: &Selection, outputs: Outputs) -> Result<Vec<PairConfig>, PipelineError> {
        if !outputs.evolve {
            return Ok(Vec::new());
        }
        Ok(self
            .cfg
            .pairs
            .iter()
            .filter(|p| sel.release.as_ref().is_none_or(|t| *t == p.prev || *t == p.next))
            .cloned()
            .collect())
    }

    fn selected_releases(
        &self,
        sel: &Selection,
        pairs: &[PairConfig],
    ) -> Result<Vec<&ReleaseConfig>, PipelineError> {
        let Some(tag) = &sel.release else {
            return Ok(self.cfg.releases.iter().collect());
        };
        if self.cfg.release(tag).is_none() {
            return Err(PipelineError::input(Stage::Config, format!("unknown release {tag}")));
        }
        let mut wanted: BTreeSet<&str> = BTreeSet::from([tag.as_str()]);
        for p in pairs {
            wanted.insert(&p.prev);
            wanted.insert(&p.next);
        }
        Ok(self.cfg.releases.iter().filter(|r| wanted.contains(r.tag.as_str())).collect())
    }

    fn check_paths(&self, releases: &[&ReleaseConfig], outputs: Outputs) -> Result<(), PipelineError> {
        for r in releases {
            if !r.corpus.exists() {
                return Err(PipelineError::input(
                    Stage::SourceFacts,
                    format!("release {}: corpus {} does not exist", r.tag, r.corpus.display()),
                ));
            }
        }
        if outputs.needs_ledger() {
            for (what, p) in [("commit log", &self.cfg.commit_log), ("issue registry", &self.cfg.registry)] {
                if !p.is_file() {
                    return Err(PipelineError::input(
                        Stage::BugMapping,
                        format!("{what} {} does not exist", p.display()),
                    ));
                }
            }
        }
        Ok(())
    }

    fn load_commits(&self) -> Result<Vec<CommitEntry>, PipelineError> {
        let mut commits = parse_commit_log(&self.cfg.commit_log)
            .map_err(|e| PipelineError::input(Stage::BugMapping, e.to_string()))?;
        if let Some(prefix) = &self.cfg.strip_prefix {
            for c in &mut commits {
                for f in &mut c.files {
                    if let Some(rest) = f.strip_prefix(prefix.as_str()) {
                        *f = rest.to_string();
                    }
                }
            }
        }
        Ok(commits)
    }

    fn release_dir(&self, tag: &str) -> Result<PathBuf, PipelineError> {
        let dir = self.out.join(tag);
        std::fs::create_dir_all(&dir)
            .map_err(|e| PipelineError::input(Stage::Output, format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn write_fits(&self, run: &ReleaseRun, metrics: &[Metric]) -> Result<(), PipelineError> {
        let m = run.metrics.as_ref().expect("computed before fits");
        let ledger = run.ledger.as_ref().expect("computed before fits");
        let mut quantities: Vec<(String, FitMode, Vec<f64>)> = metrics
            .iter()
            .map(|&metric| {
                // line counts live on a scale where the continuous model fits better
                let mode = if metric == Metric::Loc { FitMode::Continuous } else { FitMode::Discrete };
                (metric.column().to_string(), mode, m.cus.values().map(|v| f64::from(metric.of(v))).collect())
            })
            .collect();
        quantities.push((
            "bugs_per_cu".into(),
            FitMode::Discrete,
            m.cus.keys().map(|p| f64::from(ledger.bugs(p))).collect(),
        ));
        quantities.push((
            "cus_per_bug".into(),
            FitMode::Discrete,
            ledger.cus_per_bug.values().map(|&n| f64::from(n)).collect(),
        ));

        let dir = self.release_dir(&run.cfg.tag)?.join("ccdf");
        std::fs::create_dir_all(&dir)
            .map_err(|e| PipelineError::input(Stage::Output, format!("cannot create {}: {e}", dir.display())))?;
        let mut records = Vec::new();
        for (name, mode, samples) in &quantities {
            match ccdf(samples) {
                Ok(curve) => write_out(&dir.join(format!("{name}.tsv")), |w| csv_ok(write_ccdf(w, &curve)))?,
                Err(StatsError::EmptyInput) => {}
                Err(e) => return Err(PipelineError::invariant(Stage::TailStats, format!("{name}: {e}"))),
            }
            records.push(fit_record(&run.cfg.tag, name, *mode, samples));
        }
        write_out(&self.out.join(&run.cfg.tag).join("fits.jsonl"), |w| {
            for r in &records {
                serde_json::to_writer(&mut *w, r).map_err(|e| e.to_string())?;
                writeln!(w).map_err(|e| e.to_string())?;
            }
            Ok(())
        })
    }

    fn write_evolution(
        &self,
        runs: &[ReleaseRun],
        pairs: &[PairConfig],
        metrics: &[Metric],
    ) -> Result<(), PipelineError> {
        let snapshot = |tag: &str| -> Result<ReleaseSnapshot, PipelineError> {
            let run = runs.iter().find(|r| r.cfg.tag == tag).expect("pair endpoints are loaded");
            ReleaseSnapshot::new(
                tag,
                run.metrics.as_ref().expect("metrics computed").cus.clone(),
                run.ledger.clone().expect("ledger computed"),
            )
            .map_err(|e| PipelineError::invariant(Stage::Evolution, e.to_string()))
        };
        let mut families = Vec::new();
        let mut chi = Vec::new();
        let mut deltas = Vec::new();
        for pair in pairs {
            let prev = snapshot(&pair.prev)?;
            let next = snapshot(&pair.next)?;
            let label = pair.label();
            for &metric in metrics {
                let part = classify_cus(&prev, &next, metric);
                for (family, stats) in all_family_stats(&part, next.ledger()) {
                    families.push(FamilyRow { pair: label.clone(), metric, family, stats });
                }
                chi.push(match family_significance(&part, next.ledger()) {
                    Ok(r) => vec![label.clone(), metric.label().into(), r.chi2.to_string(), r.dof.to_string(), r.p_value.to_string(), String::new()],
                    Err(e) => vec![label.clone(), metric.label().into(), "NA".into(), "NA".into(), "NA".into(), e.to_string()],
                });
                deltas.push(match delta_metric_correlation(&part, &prev, &next) {
                    Ok(d) => vec![label.clone(), metric.label().into(), d.r.to_string(), d.n_used.to_string(), d.n_excluded.to_string(), String::new()],
                    Err(e) => {
                        let excluded = part
                            .updated
                            .iter()
                            .filter(|p| prev.metrics().get(*p).is_some_and(|v| metric.of(v) == 0))
                            .count();
                        let used = part.updated.len() - excluded;
                        vec![label.clone(), metric.label().into(), "NA".into(), used.to_string(), excluded.to_string(), e.to_string()]
                    }
                });
            }
        }
        write_out(&self.out.join("evolution.tsv"), |w| csv_ok(write_family_report(w, &families)))?;
        write_out(&self.out.join("chi_square.tsv"), |w| {
            write_rows(w, &["pair", "metric", "chi2", "dof", "p_value", "note"], &chi)
        })?;
        write_out(&self.out.join("delta_correlation.tsv"), |w| {
            write_rows(w, &["pair", "metric", "r", "n_used", "n_excluded", "note"], &deltas)
        })
    }
}

fn fit_record(release: &str, quantity: &str, mode: FitMode, samples: &[f64]) -> FitRecord {
    let mut rec = FitRecord {
        release: release.into(),
        quantity: quantity.into(),
        n: samples.len(),
        mode,
        status: "ok",
        gamma: None,
        x_min: None,
        ks: None,
        n_tail: None,
        detail: None,
    };
    match fit_power_law_tail(samples, mode, None) {
        Ok(f) => {
            rec.gamma = Some(f.gamma);
            rec.x_min = Some(f.x_min);
            rec.ks = Some(f.ks);
            rec.n_tail = Some(f.n_tail);
        }
        Err(e) => {
            rec.status = match e {
                StatsError::InsufficientTail { .. } => "insufficient_tail",
                StatsError::EmptyInput => "empty",
                _ => "failed",
            };
            rec.detail = Some(e.to_string());
        }
    }
    rec
}

fn write_correlations<W: Write>(w: &mut W, runs: &[ReleaseRun], metrics: &[Metric]) -> Result<(), String> {
    let mut header = vec!["correlation".to_string()];
    header.extend(runs.iter().map(|r| r.cfg.tag.clone()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for metric in metrics {
        let mut row = vec![format!("bugs-{}", metric.label())];
        for run in runs {
            let m = run.metrics.as_ref().expect("computed before correlations");
            let ledger = run.ledger.as_ref().expect("computed before correlations");
            let xs: Vec<f64> = m.cus.values().map(|v| f64::from(metric.of(v))).collect();
            let ys: Vec<f64> = m.cus.keys().map(|p| f64::from(ledger.bugs(p))).collect();
            row.push(pearson(&xs, &ys).map_or_else(|_| "NA".to_string(), |r| r.to_string()));
        }
        rows.push(row);
    }
    write_rows(w, &header, &rows)
}

fn write_skipped<W: Write>(w: &mut W, skipped: &[Skipped]) -> Result<(), String> {
    let rows: Vec<Vec<String>> = skipped.iter().map(|s| vec![s.path.clone(), s.error.clone()]).collect();
    write_rows(w, &["path", "error"], &rows)
}

fn write_rows<W: Write>(w: &mut W, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
    let mut t = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    t.write_record(header).map_err(|e| e.to_string())?;
    for r in rows {
        t.write_record(r).map_err(|e| e.to_string())?;
    }
    t.flush().map_err(|e| e.to_string())
}

fn csv_ok(r: csv::Result<()>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn write_out(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>,
) -> Result<(), PipelineError> {
    let fail = |e: String| PipelineError::input(Stage::Output, format!("cannot write {}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| fail(e.to_string()))?;
    }
    let file = File::create(path).map_err(|e| fail(e.to_string()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(fail)?;
    w.flush().map_err(|e| fail(e.to_string()))
}
