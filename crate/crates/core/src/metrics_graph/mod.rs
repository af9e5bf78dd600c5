//! Class graph, CU graph and CK-style metrics at both granularities.
//!
//! Class edges come in three kinds. Inheritance follows `extends` and
//! `implements`; composition follows field types (classes only, interface
//! constants do not compose); dependence follows types named in method
//! signatures and bodies, including call receivers. A CU edge aggregates
//! class edges of one kind between two different CUs, weighted by how many
//! class edges it carries.

pub mod export;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::source_facts::{ClassId, ClassKind, ResolvedClass, ResolvedCorpus, ResolvedCu};

pub use export::{write_class_edges, write_class_metrics, write_cu_edges, write_metrics_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Inheritance,
    Composition,
    Dependence,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Inheritance => "inheritance",
            EdgeKind::Composition => "composition",
            EdgeKind::Dependence => "dependence",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassEdge {
    pub source: ClassId,
    pub target: ClassId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGraph {
    pub nodes: BTreeSet<ClassId>,
    pub edges: BTreeSet<ClassEdge>,
}

impl ClassGraph {
    pub fn out_edges<'a>(&'a self, node: &'a ClassId) -> impl Iterator<Item = &'a ClassEdge> + 'a {
        self.edges.iter().filter(move |e| &e.source == node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CuEdge {
    pub source: String,
    pub target: String,
    pub kind: EdgeKind,
    /// Number of class edges of this kind from classes of `source` to
    /// classes of `target`; always at least 1.
    pub weight: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuGraph {
    pub nodes: BTreeSet<String>,
    /// Sorted by (source, target, kind).
    pub edges: Vec<CuEdge>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub wmc: u32,
    pub cbo: u32,
    pub rfc: u32,
    pub lcom: u32,
    pub loc: u32,
}

/// Per-CU metric tuple.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricVector {
    pub in_links: u32,
    pub out_links: u32,
    pub cu_loc: u32,
    pub cu_cbo: u32,
    pub cu_rfc: u32,
    pub cu_wmc: u32,
    pub cu_lcom: u32,
}

/// One component of [`MetricVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    InLinks,
    OutLinks,
    Loc,
    Cbo,
    Rfc,
    Wmc,
    Lcom,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::InLinks,
        Metric::OutLinks,
        Metric::Loc,
        Metric::Cbo,
        Metric::Rfc,
        Metric::Wmc,
        Metric::Lcom,
    ];

    /// Column name used in metric tables.
    pub fn column(self) -> &'static str {
        match self {
            Metric::InLinks => "in_links",
            Metric::OutLinks => "out_links",
            Metric::Loc => "cu_loc",
            Metric::Cbo => "cu_cbo",
            Metric::Rfc => "cu_rfc",
            Metric::Wmc => "cu_wmc",
            Metric::Lcom => "cu_lcom",
        }
    }

    /// Short upper-case label, as in `bugs-CBO`.
    pub fn label(self) -> &'static str {
        match self {
            Metric::InLinks => "In-links",
            Metric::OutLinks => "Out-links",
            Metric::Loc => "LOC",
            Metric::Cbo => "CBO",
            Metric::Rfc => "RFC",
            Metric::Wmc => "WMC",
            Metric::Lcom => "LCOM",
        }
    }

    pub fn of(self, v: &MetricVector) -> u32 {
        match self {
            Metric::InLinks => v.in_links,
            Metric::OutLinks => v.out_links,
            Metric::Loc => v.cu_loc,
            Metric::Cbo => v.cu_cbo,
            Metric::Rfc => v.cu_rfc,
            Metric::Wmc => v.cu_wmc,
            Metric::Lcom => v.cu_lcom,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric {0:?} (expected one of in_links, out_links, loc, cbo, rfc, wmc, lcom)")]
pub struct UnknownMetric(pub String);

impl FromStr for Metric {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let key = key.strip_prefix("cu_").unwrap_or(&key);
        Ok(match key {
            "in_links" | "inlinks" => Metric::InLinks,
            "out_links" | "outlinks" => Metric::OutLinks,
            "loc" | "locs" => Metric::Loc,
            "cbo" => Metric::Cbo,
            "rfc" => Metric::Rfc,
            "wmc" => Metric::Wmc,
            "lcom" => Metric::Lcom,
            _ => return Err(UnknownMetric(s.to_string())),
        })
    }
}

pub fn build_class_graph(corpus: &ResolvedCorpus) -> ClassGraph {
    let mut g = ClassGraph::default();
    for class in corpus.classes() {
        g.nodes.insert(class.id.clone());
        let me = &class.id;
        let mut add = |target: Option<&ClassId>, kind| {
            if let Some(t) = target.filter(|t| *t != me) {
                g.edges.insert(ClassEdge { source: me.clone(), target: t.clone(), kind });
            }
        };
        for sup in class.extends.iter().chain(&class.implements) {
            add(sup.internal(), EdgeKind::Inheritance);
        }
        if class.kind == ClassKind::Class {
            for f in &class.field_types {
                add(f.internal(), EdgeKind::Composition);
            }
        }
        for m in &class.methods {
            for t in m.referenced_types.iter().chain(m.external_calls.iter().map(|(t, _)| t)) {
                add(t.internal(), EdgeKind::Dependence);
            }
        }
    }
    g
}

pub fn build_cu_graph(cg: &ClassGraph, corpus: &ResolvedCorpus) -> CuGraph {
    let nodes: BTreeSet<String> = corpus.cus.iter().map(|cu| cu.path.clone()).collect();
    let mut weights: BTreeMap<(&str, &str, EdgeKind), u32> = BTreeMap::new();
    for e in &cg.edges {
        if e.source.cu != e.target.cu {
            *weights.entry((&e.source.cu, &e.target.cu, e.kind)).or_default() += 1;
        }
    }
    let edges = weights
        .into_iter()
        .map(|((s, t, kind), weight)| CuEdge { source: s.into(), target: t.into(), kind, weight })
        .collect();
    CuGraph { nodes, edges }
}

/// CK metrics of one class. Unit method weights; LCOM floored at zero.
pub fn class_metrics(c: &ResolvedClass, cg: &ClassGraph) -> ClassMetrics {
    let methods = c.methods.len() as u32;
    let coupled: BTreeSet<&ClassId> = cg
        .out_edges(&c.id)
        .filter(|e| e.kind != EdgeKind::Inheritance)
        .map(|e| &e.target)
        .collect();
    let calls: BTreeSet<_> = c.methods.iter().flat_map(|m| m.external_calls.iter()).collect();

    let fields: BTreeSet<&String> = c.field_names.iter().collect();
    let (mut cohesive, mut disjoint) = (0i64, 0i64);
    for (i, a) in c.methods.iter().enumerate() {
        for b in &c.methods[i + 1..] {
            let shares = a
                .used_fields
                .iter()
                .any(|f| fields.contains(f) && b.used_fields.contains(f));
            if shares {
                cohesive += 1;
            } else {
                disjoint += 1;
            }
        }
    }

    ClassMetrics {
        wmc: methods,
        cbo: coupled.len() as u32,
        rfc: methods + calls.len() as u32,
        lcom: (disjoint - cohesive).max(0) as u32,
        loc: c.loc,
    }
}

pub fn cu_metrics(
    cu: &ResolvedCu,
    cug: &CuGraph,
    per_class: &BTreeMap<ClassId, ClassMetrics>,
) -> MetricVector {
    let mut out_nbrs = BTreeSet::new();
    let mut in_nbrs = BTreeSet::new();
    let mut coupled = BTreeSet::new();
    let mut rfc = 0;
    for e in &cug.edges {
        if e.source == cu.path {
            out_nbrs.insert(&e.target);
            rfc += e.weight;
            if e.kind != EdgeKind::Inheritance {
                coupled.insert(&e.target);
            }
        }
        if e.target == cu.path {
            in_nbrs.insert(&e.source);
        }
    }
    let mut v = MetricVector {
        in_links: in_nbrs.len() as u32,
        out_links: out_nbrs.len() as u32,
        cu_cbo: coupled.len() as u32,
        cu_rfc: rfc,
        ..MetricVector::default()
    };
    for c in &cu.classes {
        let m = per_class.get(&c.id).copied().unwrap_or_default();
        v.cu_loc += m.loc;
        v.cu_wmc += m.wmc;
        v.cu_lcom += m.lcom;
    }
    v
}

/// All graphs and metrics for one release snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemMetrics {
    pub class_graph: ClassGraph,
    pub cu_graph: CuGraph,
    pub classes: BTreeMap<ClassId, ClassMetrics>,
    pub cus: BTreeMap<String, MetricVector>,
}

pub fn compute_metrics(corpus: &ResolvedCorpus) -> SystemMetrics {
    let class_graph = build_class_graph(corpus);
    let cu_graph = build_cu_graph(&class_graph, corpus);
    let classes: BTreeMap<ClassId, ClassMetrics> =
        corpus.classes().map(|c| (c.id.clone(), class_metrics(c, &class_graph))).collect();
    let cus = corpus
        .cus
        .iter()
        .map(|cu| (cu.path.clone(), cu_metrics(cu, &cu_graph, &classes)))
        .collect();
    SystemMetrics { class_graph, cu_graph, classes, cus }
}
