//! Software-graph metrics, issue-to-file bug mapping and heavy-tail
//! statistics for Java-like code bases.
//!
//! The pipeline runs bottom-up: [`source_facts`] parses compilation units,
//! [`metrics_graph`] builds class and CU graphs with CK-style metrics,
//! [`bug_mapping`] turns commit logs into per-release bug ledgers,
//! [`tail_stats`] fits distributions and correlations and [`evolution`]
//! compares consecutive releases. [`report`] wires it all to files.

pub mod source_facts;
pub mod metrics_graph;
pub mod bug_mapping;
pub mod tail_stats;
pub mod evolution;
pub mod synth;
pub mod report;
