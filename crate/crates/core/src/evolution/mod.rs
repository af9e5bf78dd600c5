//! Cross-release analysis: metric families (updated, unchanged, added),
//! infection statistics, fractional-change correlations and family
//! significance tests.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use crate::bug_mapping::BugLedger;
use crate::metrics_graph::{Metric, MetricVector};
use crate::tail_stats::{chi_square_independence, pearson, ChiSquareResult, StatsError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvolutionError {
    #[error("family {0} is empty")]
    EmptyFamily(Family),
    #[error("snapshot {release}: {message}")]
    Snapshot { release: String, message: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Family {
    #[serde(rename = "CU.U")]
    Updated,
    #[serde(rename = "CU.X")]
    Unchanged,
    #[serde(rename = "CU.A")]
    Added,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Updated, Family::Unchanged, Family::Added];

    pub fn label(self) -> &'static str {
        match self {
            Family::Updated => "CU.U",
            Family::Unchanged => "CU.X",
            Family::Added => "CU.A",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Metrics and bug ledger of one release.
#[derive(Debug, Clone, PartialEq)]
pub struct ReleaseSnapshot {
    release: String,
    metrics: BTreeMap<String, MetricVector>,
    ledger: BugLedger,
}

impl ReleaseSnapshot {
    /// Fails if the ledger belongs to another release or counts bugs for a
    /// CU without metrics.
    pub fn new(
        release: impl Into<String>,
        metrics: BTreeMap<String, MetricVector>,
        ledger: BugLedger,
    ) -> Result<Self, EvolutionError> {
        let release = release.into();
        if ledger.release != release {
            return Err(EvolutionError::Snapshot {
                message: format!("ledger is for release {}", ledger.release),
                release,
            });
        }
        if let Some((path, _)) =
            ledger.bugs_per_cu.iter().find(|(p, n)| **n > 0 && !metrics.contains_key(*p))
        {
            return Err(EvolutionError::Snapshot {
                message: format!("bugs recorded for {path}, which has no metrics"),
                release,
            });
        }
        Ok(Self { release, metrics, ledger })
    }

    pub fn release(&self) -> &str {
        &self.release
    }

    pub fn metrics(&self) -> &BTreeMap<String, MetricVector> {
        &self.metrics
    }

    pub fn ledger(&self) -> &BugLedger {
        &self.ledger
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyPartition {
    pub metric: Metric,
    pub updated: BTreeSet<String>,
    pub unchanged: BTreeSet<String>,
    pub added: BTreeSet<String>,
    /// Present only in the earlier release; left out of every statistic.
    pub deleted: BTreeSet<String>,
}

impl FamilyPartition {
    pub fn family(&self, f: Family) -> &BTreeSet<String> {
        match f {
            Family::Updated => &self.updated,
            Family::Unchanged => &self.unchanged,
            Family::Added => &self.added,
        }
    }
}

pub fn classify_cus(prev: &ReleaseSnapshot, next: &ReleaseSnapshot, metric: Metric) -> FamilyPartition {
    let mut p = FamilyPartition {
        metric,
        updated: BTreeSet::new(),
        unchanged: BTreeSet::new(),
        added: BTreeSet::new(),
        deleted: BTreeSet::new(),
    };
    for (path, v) in &next.metrics {
        match prev.metrics.get(path) {
            Some(old) if metric.of(old) != metric.of(v) => p.updated.insert(path.clone()),
            Some(_) => p.unchanged.insert(path.clone()),
            None => p.added.insert(path.clone()),
        };
    }
    for path in prev.metrics.keys() {
        if !next.metrics.contains_key(path) {
            p.deleted.insert(path.clone());
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyStats {
    pub infection_probability: f64,
    /// Mean bug count over infected members; `None` when none is infected.
    pub mean_bugs_infected: Option<f64>,
    pub n: usize,
    pub infected: usize,
}

pub fn family_stats(
    family: &BTreeSet<String>,
    ledger: &BugLedger,
) -> Result<FamilyStats, EvolutionError> {
    family_stats_of(Family::Updated, family, ledger)
}

fn family_stats_of(
    which: Family,
    family: &BTreeSet<String>,
    ledger: &BugLedger,
) -> Result<FamilyStats, EvolutionError> {
    if family.is_empty() {
        return Err(EvolutionError::EmptyFamily(which));
    }
    let counts: Vec<u32> = family.iter().map(|p| ledger.bugs(p)).filter(|&c| c > 0).collect();
    let infected = counts.len();
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    Ok(FamilyStats {
        infection_probability: infected as f64 / family.len() as f64,
        mean_bugs_infected: (infected > 0).then(|| total as f64 / infected as f64),
        n: family.len(),
        infected,
    })
}

/// Stats for each family that has members.
pub fn all_family_stats(
    partition: &FamilyPartition,
    ledger: &BugLedger,
) -> Vec<(Family, FamilyStats)> {
    Family::ALL
        .iter()
        .filter_map(|&f| family_stats_of(f, partition.family(f), ledger).ok().map(|s| (f, s)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaCorrelation {
    pub r: f64,
    pub n_used: usize,
    /// Updated CUs skipped because the earlier value was zero.
    pub n_excluded: usize,
}

/// Pearson correlation, over updated CUs, between `(M_next - M_prev) / M_prev`
/// and the bug count in the later release.
pub fn delta_metric_correlation(
    partition: &FamilyPartition,
    prev: &ReleaseSnapshot,
    next: &ReleaseSnapshot,
) -> Result<DeltaCorrelation, EvolutionError> {
    let m = partition.metric;
    let mut deltas = Vec::new();
    let mut bugs = Vec::new();
    let mut n_excluded = 0;
    for path in &partition.updated {
        let (Some(old), Some(new)) = (prev.metrics.get(path), next.metrics.get(path)) else {
            continue;
        };
        let before = f64::from(m.of(old));
        if before == 0.0 {
            n_excluded += 1;
            continue;
        }
        deltas.push((f64::from(m.of(new)) - before) / before);
        bugs.push(f64::from(next.ledger.bugs(path)));
    }
    let r = pearson(&deltas, &bugs)?;
    Ok(DeltaCorrelation { r, n_used: deltas.len(), n_excluded })
}

/// Chi-square test on the 3×2 table family × (infected, clean).
pub fn family_significance(
    partition: &FamilyPartition,
    ledger: &BugLedger,
) -> Result<ChiSquareResult, EvolutionError> {
    let mut table = Vec::with_capacity(3);
    for f in Family::ALL {
        let s = family_stats_of(f, partition.family(f), ledger)?;
        table.push(vec![s.infected as f64, (s.n - s.infected) as f64]);
    }
    Ok(chi_square_independence(&table)?)
}

/// One row of the family report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRow {
    pub pair: String,
    pub metric: Metric,
    pub family: Family,
    pub stats: FamilyStats,
}

pub fn write_family_report<W: Write>(out: W, rows: &[FamilyRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    w.write_record(["pair", "metric", "family", "n", "infected", "infection_probability", "mean_bugs_infected"])?;
    for r in rows {
        w.write_record([
            r.pair.clone(),
            r.metric.label().to_string(),
            r.family.label().to_string(),
            r.stats.n.to_string(),
            r.stats.infected.to_string(),
            r.stats.infection_probability.to_string(),
            r.stats.mean_bugs_infected.map_or_else(|| "NA".to_string(), |m| m.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
