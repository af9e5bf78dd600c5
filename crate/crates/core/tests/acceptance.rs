//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use chrono::{Duration, TimeZone, Utc};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use bugtail::bug_mapping::{build_bug_ledger, CommitEntry, FilterConfig, IssueRegistry, ReleaseWindow};
use bugtail::evolution::{classify_cus, family_significance, family_stats, ReleaseSnapshot};
use bugtail::metrics_graph::{compute_metrics, ClassMetrics, Metric, MetricVector};
use bugtail::report::extract_corpus;
use bugtail::source_facts::{resolve_type_references, ClassId};
use bugtail::synth;
use bugtail::tail_stats::{
    ccdf, chi_square_independence, expected_max, fit_power_law_tail, loglog_slope, pearson, FitMode,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/shop")
}

const SAMPLES: usize = 100_000;

fn criterion_1_power_law_recovery() -> Outcome {
    let t = Instant::now();
    let cont = synth::pareto(&mut synth::rng(2024), SAMPLES, 2.5, 1.0);
    let fc = fit_power_law_tail(&cont, FitMode::Continuous, Some(1.0)).map_err(|e| e.to_string())?;
    let disc = synth::discrete_power_law(&mut synth::rng(2025), SAMPLES, 3.0, 1);
    let fd = fit_power_law_tail(&disc, FitMode::Discrete, Some(1.0)).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    check(
        (fc.gamma - 2.5).abs() <= 0.05 && (fd.gamma - 3.0).abs() <= 0.1 && secs < 5.0,
        format!("continuous γ̂={:.4} (2.5±0.05), discrete γ̂={:.4} (3.0±0.1), {secs:.2}s (<5s)", fc.gamma, fd.gamma),
    )
}

fn criterion_2_expected_max() -> Outcome {
    let t = Instant::now();
    let target = expected_max(1000, 3.0).map_err(|e| e.to_string())?;
    let mean = synth::mean_max(&mut synth::rng(7), 1000, 2000, 3.0, 1.0);
    let secs = t.elapsed().as_secs_f64();
    let rel = (mean - target).abs() / target;
    check(
        rel <= 0.10 && secs < 10.0,
        format!("mean max {mean:.2} vs n^(1/(γ-1)) = {target:.2}, off by {:.1}% (≤10%), {secs:.2}s (<10s)", rel * 100.0),
    )
}

fn criterion_3_slope_consistency() -> Outcome {
    let xs = synth::pareto(&mut synth::rng(2024), SAMPLES, 2.5, 1.0);
    let fit = fit_power_law_tail(&xs, FitMode::Continuous, Some(1.0)).map_err(|e| e.to_string())?;
    let curve = ccdf(&xs).map_err(|e| e.to_string())?;
    // tail from x_min down to a probability of 1e-3 (100 samples left)
    let slope = loglog_slope(&curve, fit.x_min, 1e-3).map_err(|e| e.to_string())?;
    let gap = ((fit.gamma - 1.0) - slope.abs()).abs();
    check(gap <= 0.15, format!("γ̂-1 = {:.4}, |slope| = {:.4}, gap {gap:.4} (≤0.15)", fit.gamma - 1.0, slope.abs()))
}

/// Chi-square statistic written out directly, p-value from statrs.
fn reference_chi_square(table: &[Vec<f64>]) -> (f64, f64) {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let n: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, o) in r.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            stat += (o - e) * (o - e) / e;
        }
    }
    let dof = ((table.len() - 1) * (cols.len() - 1)) as f64;
    (stat, 1.0 - ChiSquared::new(dof).unwrap().cdf(stat))
}

fn criterion_4_statistical_oracles() -> Outcome {
    let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).map_err(|e| e.to_string())?;
    let two = chi_square_independence(&[vec![30.0, 10.0], vec![10.0, 30.0]]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rows = rng.random_range(2..=5);
        let cols = rng.random_range(2..=5);
        let table: Vec<Vec<f64>> =
            (0..rows).map(|_| (0..cols).map(|_| f64::from(rng.random_range(1..60u32))).collect()).collect();
        let ours = chi_square_independence(&table).map_err(|e| e.to_string())?;
        let (stat, p) = reference_chi_square(&table);
        worst = worst.max((ours.chi2 - stat).abs()).max((ours.p_value - p).abs());
    }
    check(
        (r - 0.8).abs() <= 1e-12 && (two.chi2 - 20.0).abs() <= 1e-9 && worst <= 1e-6,
        format!("pearson {r} (0.8±1e-12), 2x2 chi2 {} (20±1e-9), worst deviation on 20 tables {worst:.2e} (≤1e-6)", two.chi2),
    )
}

fn criterion_5_metric_oracle() -> Outcome {
    let corpus = extract_corpus(&fixture().join("r2")).map_err(|e| e.to_string())?;
    if !corpus.skipped.is_empty() || corpus.facts.len() != 6 {
        return Err(format!("expected 6 clean CUs, got {} with {} skipped", corpus.facts.len(), corpus.skipped.len()));
    }
    let m = compute_metrics(&resolve_type_references(&corpus.facts));

    // (path, class, wmc, cbo, rfc, lcom, loc), worked out by hand from the sources
    let classes = [
        ("shop/Cart.java", "Cart", 3, 2, 7, 0, 17),
        ("shop/Checkout.java", "Checkout", 2, 2, 4, 0, 11),
        ("shop/Checkout.java", "Checkout.Receipt", 1, 1, 2, 0, 6),
        ("shop/Discount.java", "Discount", 3, 0, 3, 1, 12),
        ("shop/Item.java", "Item", 3, 0, 3, 0, 14),
        ("shop/Priced.java", "Priced", 1, 0, 1, 0, 3),
        ("shop/util/Log.java", "Log", 3, 0, 3, 3, 10),
    ];
    let want_classes: BTreeMap<ClassId, ClassMetrics> = classes
        .iter()
        .map(|&(p, c, wmc, cbo, rfc, lcom, loc)| (ClassId::new(p, c), ClassMetrics { wmc, cbo, rfc, lcom, loc }))
        .collect();
    // (path, in, out, loc, cbo, rfc, wmc, lcom)
    let cus = [
        ("shop/Cart.java", 1, 3, 17, 2, 5, 3, 0),
        ("shop/Checkout.java", 0, 2, 17, 2, 4, 3, 0),
        ("shop/Discount.java", 1, 0, 12, 0, 0, 3, 1),
        ("shop/Item.java", 1, 0, 14, 0, 0, 3, 0),
        ("shop/Priced.java", 1, 0, 3, 0, 0, 1, 0),
        ("shop/util/Log.java", 1, 0, 10, 0, 0, 3, 3),
    ];
    let want_cus: BTreeMap<String, MetricVector> = cus
        .iter()
        .map(|&(p, in_links, out_links, cu_loc, cu_cbo, cu_rfc, cu_wmc, cu_lcom)| {
            (p.to_string(), MetricVector { in_links, out_links, cu_loc, cu_cbo, cu_rfc, cu_wmc, cu_lcom })
        })
        .collect();

    let ins: u32 = m.cus.values().map(|v| v.in_links).sum();
    let outs: u32 = m.cus.values().map(|v| v.out_links).sum();
    let cbo_ok = m.cus.values().all(|v| v.cu_cbo <= v.out_links);
    let classes_ok = m.classes == want_classes;
    let cus_ok = m.cus == want_cus;
    check(
        classes_ok && cus_ok && ins == outs && cbo_ok,
        format!(
            "class table {}, CU table {}, Σin={ins} Σout={outs}, cu_cbo ≤ out_links {}",
            if classes_ok { "matches" } else { "differs" },
            if cus_ok { "matches" } else { "differs" },
            if cbo_ok { "holds" } else { "violated" },
        ),
    )
}

fn random_commits(seed: u64, n: usize) -> (Vec<CommitEntry>, IssueRegistry) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let registry = IssueRegistry::from_ids((1..=400).filter(|_| rng.random_bool(0.7)), "r");
    let files: Vec<String> = (0..150).map(|i| format!("pkg{}/F{i}.java", i % 7)).collect();
    let start = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let commits = (0..n)
        .map(|i| {
            let mut msg = String::from(["fix", "Bug", "refactor", "issue", "update"][rng.random_range(0..5)]);
            for _ in 0..rng.random_range(0..4) {
                msg.push_str(&format!(" #{}", rng.random_range(0..500)));
            }
            let k = rng.random_range(0..6);
            let touched: BTreeSet<String> = (0..k).map(|_| files[rng.random_range(0..files.len())].clone()).collect();
            CommitEntry {
                timestamp: start + Duration::minutes(i as i64 * 37),
                author: format!("dev{}", rng.random_range(0..5)),
                message: msg,
                files: touched.into_iter().collect(),
            }
        })
        .collect();
    (commits, registry)
}

fn criterion_6_ledger_identity() -> Outcome {
    let filter = FilterConfig::default().compile().map_err(|e| e.to_string())?;
    let window = ReleaseWindow::new(
        Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
        Utc.with_ymd_and_hms(2030, 1, 1, 0, 0, 0).unwrap(),
    )
    .unwrap();
    let cases = 128;
    let mut runner = TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let links = std::cell::Cell::new(0usize);
    let result = runner.run(&proptest::num::u64::ANY, |seed| {
        let (commits, registry) = random_commits(seed, 1000);
        let ledger = build_bug_ledger(&commits, &registry, &filter, &window, "r");
        let per_cu: u64 = ledger.bugs_per_cu.values().map(|&n| u64::from(n)).sum();
        let per_bug: u64 = ledger.cus_per_bug.values().map(|&n| u64::from(n)).sum();
        links.set(links.get().max(ledger.links.len()));
        proptest::prop_assert_eq!(per_cu, per_bug);
        proptest::prop_assert_eq!(per_cu, ledger.links.len() as u64);
        Ok(())
    });
    match result {
        Ok(()) => Ok(format!("{cases} seeds × 1000 commits, Σ bugs_per_cu = Σ cus_per_bug (up to {} links)", links.get())),
        Err(e) => Err(e.to_string()),
    }
}

fn criterion_7_family_pipeline() -> Outcome {
    // 100 CUs per family; infected: 70 updated, 20 unchanged, 50 added
    let base = |loc| MetricVector { cu_loc: loc, cu_wmc: 2, ..MetricVector::default() };
    let mut prev = BTreeMap::new();
    let mut next = BTreeMap::new();
    let mut commits = Vec::new();
    let t0 = Utc.with_ymd_and_hms(2024, 6, 1, 0, 0, 0).unwrap();
    let hit = |path: &str, k: usize, commits: &mut Vec<CommitEntry>| {
        // k distinct issues, so infected CUs carry 1 to 3 bugs
        for j in 0..k {
            commits.push(CommitEntry {
                timestamp: t0 + Duration::hours(commits.len() as i64),
                author: "dev".into(),
                message: format!("fix bug {}", 1000 + commits.len() + j),
                files: vec![path.to_string()],
            });
        }
    };
    for i in 0..100 {
        let u = format!("upd/U{i:03}.java");
        prev.insert(u.clone(), base(40));
        next.insert(u.clone(), base(55));
        if i < 70 {
            hit(&u, 1 + i % 3, &mut commits);
        }
        let x = format!("same/X{i:03}.java");
        prev.insert(x.clone(), base(40));
        next.insert(x.clone(), base(40));
        if i < 20 {
            hit(&x, 1, &mut commits);
        }
        let a = format!("new/A{i:03}.java");
        next.insert(a.clone(), base(30));
        if i < 50 {
            hit(&a, 2, &mut commits);
        }
        prev.insert(format!("gone/D{i:03}.java"), base(10));
    }
    let registry = IssueRegistry::from_ids(1000..1000 + commits.len() as u64 + 10, "2");
    let filter = FilterConfig::default().compile().map_err(|e| e.to_string())?;
    let window = ReleaseWindow::new(t0, t0 + Duration::days(365)).unwrap();
    let ledger = build_bug_ledger(&commits, &registry, &filter, &window, "2").restricted_to(next.keys());
    let p = ReleaseSnapshot::new("1", prev, bugtail::bug_mapping::BugLedger::from_links("1", BTreeSet::new()))
        .map_err(|e| e.to_string())?;
    let n = ReleaseSnapshot::new("2", next, ledger).map_err(|e| e.to_string())?;
    let part = classify_cus(&p, &n, Metric::Loc);
    let rate = |s: &BTreeSet<String>| family_stats(s, n.ledger()).map(|f| f.infection_probability);
    let (u, x, a) = (
        rate(&part.updated).map_err(|e| e.to_string())?,
        rate(&part.unchanged).map_err(|e| e.to_string())?,
        rate(&part.added).map_err(|e| e.to_string())?,
    );
    let sig = family_significance(&part, n.ledger()).map_err(|e| e.to_string())?;
    check(
        u == 0.7 && x == 0.2 && a == 0.5 && sig.p_value < 0.001,
        format!("rates U={u} X={x} A={a} (0.7/0.2/0.5), chi2={:.3} dof={} p={:.2e} (<0.001)", sig.chi2, sig.dof, sig.p_value),
    )
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn criterion_8_end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bundles = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_bugtail"))
            .args(["report", "--config"])
            .arg(fixture().join("bugtail.toml"))
            .arg("--out")
            .arg(&out)
            .env("RUST_LOG", "error")
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("report run {run} exited with {status}"));
        }
        bundles.push(read_tree(&out));
    }
    let golden = read_tree(&fixture().join("golden"));
    let same_runs = bundles[0] == bundles[1];
    let diff: Vec<&String> = golden
        .keys()
        .chain(bundles[0].keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|k| golden.get(*k) != bundles[0].get(*k))
        .collect();
    check(
        same_runs && diff.is_empty() && !golden.is_empty(),
        format!(
            "{} files; reruns {}; golden {}",
            golden.len(),
            if same_runs { "byte-identical" } else { "differ" },
            if diff.is_empty() { "matches".to_string() } else { format!("differs in {diff:?}") }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 power-law recovery", criterion_1_power_law_recovery),
        ("2 expected maximum (Monte Carlo)", criterion_2_expected_max),
        ("3 CCDF slope consistency", criterion_3_slope_consistency),
        ("4 statistical oracles", criterion_4_statistical_oracles),
        ("5 metric oracle", criterion_5_metric_oracle),
        ("6 ledger identity", criterion_6_ledger_identity),
        ("7 family pipeline", criterion_7_family_pipeline),
        ("8 end-to-end determinism", criterion_8_end_to_end),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
