use std::collections::BTreeMap;
use std::io::Write;

use super::{ClassGraph, ClassMetrics, CuGraph, Metric, MetricVector};
use crate::source_facts::ClassId;

fn tsv<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().delimiter(b'\t').from_writer(out)
}

/// One row per CU: `path` then the seven metric columns.
pub fn write_metrics_table<W: Write>(
    out: W,
    cus: &BTreeMap<String, MetricVector>,
) -> csv::Result<()> {
    let mut w = tsv(out);
    let mut header = vec!["path"];
    header.extend(Metric::ALL.iter().map(|m| m.column()));
    w.write_record(&header)?;
    for (path, v) in cus {
        let mut row = vec![path.clone()];
        row.extend(Metric::ALL.iter().map(|m| m.of(v).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_class_metrics<W: Write>(
    out: W,
    classes: &BTreeMap<ClassId, ClassMetrics>,
) -> csv::Result<()> {
    let mut w = tsv(out);
    w.write_record(["path", "class", "wmc", "cbo", "rfc", "lcom", "loc"])?;
    for (id, m) in classes {
        w.write_record([
            id.cu.clone(),
            id.class.clone(),
            m.wmc.to_string(),
            m.cbo.to_string(),
            m.rfc.to_string(),
            m.lcom.to_string(),
            m.loc.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Edge list `source target kind weight`.
pub fn write_cu_edges<W: Write>(out: W, g: &CuGraph) -> csv::Result<()> {
    let mut w = tsv(out);
    w.write_record(["source", "target", "kind", "weight"])?;
    for e in &g.edges {
        w.write_record([e.source.as_str(), &e.target, e.kind.as_str(), &e.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Class edge list; every class edge has weight 1.
pub fn write_class_edges<W: Write>(out: W, g: &ClassGraph) -> csv::Result<()> {
    let mut w = tsv(out);
    w.write_record(["source", "target", "kind", "weight"])?;
    for e in &g.edges {
        w.write_record([e.source.to_string(), e.target.to_string(), e.kind.to_string(), "1".into()])?;
    }
    w.flush()?;
    Ok(())
}
