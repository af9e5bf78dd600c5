use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bugtail::metrics_graph::Metric;
use bugtail::report::{Command, Pipeline, PipelineConfig, Selection};
use bugtail::synth;
use bugtail::tail_stats::{ccdf, expected_max, fit_power_law_tail, write_ccdf, FitMode};

#[derive(Parser)]
#[command(name = "bugtail", version, about = "Software graph metrics, bug ledgers and heavy-tail statistics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML)
    #[arg(long, default_value = "bugtail.toml")]
    config: PathBuf,
    /// Only this release (and, for `evolve`, the pairs it belongs to)
    #[arg(long)]
    release: Option<String>,
    /// Only this metric: in_links, out_links, loc, cbo, rfc, wmc, lcom
    #[arg(long)]
    metric: Option<Metric>,
    /// Output directory, overriding the config
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse corpora into facts files
    Extract(Common),
    /// Write class and CU dependency graphs
    Graph(Common),
    /// Write per-CU and per-class metric tables
    Metrics(Common),
    /// Write per-release bug ledgers
    Bugs(Common),
    /// Write CCDFs and power-law tail fits
    Fit(Common),
    /// Write metric-bug correlation table
    Correlate(Common),
    /// Write family, chi-square and fractional-change reports for release pairs
    Evolve(Common),
    /// Run every stage
    Report(Common),
    /// Draw synthetic power-law samples and fit them
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2.5)]
    gamma: f64,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    x_min: f64,
    /// Integer-valued samples
    #[arg(long)]
    discrete: bool,
    /// Directory for samples.tsv and ccdf.tsv; only the fit is printed when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Synth(args) => return synth_cmd(&args),
        Cmd::Extract(c) => (Command::Extract, c),
        Cmd::Graph(c) => (Command::Graph, c),
        Cmd::Metrics(c) => (Command::Metrics, c),
        Cmd::Bugs(c) => (Command::Bugs, c),
        Cmd::Fit(c) => (Command::Fit, c),
        Cmd::Correlate(c) => (Command::Correlate, c),
        Cmd::Evolve(c) => (Command::Evolve, c),
        Cmd::Report(c) => (Command::Report, c),
    };
    let result = PipelineConfig::load(&common.config).and_then(|cfg| {
        let pipeline = Pipeline::new(cfg, common.out);
        let sel = Selection { release: common.release, metric: common.metric };
        pipeline.run(cmd, &sel)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn synth_cmd(a: &SynthArgs) -> ExitCode {
    if !(a.gamma > 1.0) || !(a.x_min > 0.0) || a.n == 0 {
        eprintln!("error: need gamma > 1, x_min > 0 and n > 0");
        return ExitCode::from(1);
    }
    let mut rng = synth::rng(a.seed);
    let (samples, mode) = if a.discrete {
        if a.x_min.fract() != 0.0 {
            eprintln!("error: discrete samples need an integer x_min");
            return ExitCode::from(1);
        }
        (synth::discrete_power_law(&mut rng, a.n, a.gamma, a.x_min as u64), FitMode::Discrete)
    } else {
        (synth::pareto(&mut rng, a.n, a.gamma, a.x_min), FitMode::Continuous)
    };
    let fit = match fit_power_law_tail(&samples, mode, Some(a.x_min)) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(dir) = &a.out {
        let written = std::fs::create_dir_all(dir)
            .map_err(|e| e.to_string())
            .and_then(|_| {
                let body: String = samples.iter().map(|x| format!("{x}\n")).collect();
                std::fs::write(dir.join("samples.tsv"), format!("x\n{body}")).map_err(|e| e.to_string())
            })
            .and_then(|_| {
                let curve = ccdf(&samples).map_err(|e| e.to_string())?;
                let file = std::fs::File::create(dir.join("ccdf.tsv")).map_err(|e| e.to_string())?;
                write_ccdf(file, &curve).map_err(|e| e.to_string())
            });
        if let Err(e) = written {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let emax = expected_max(a.n as u64, fit.gamma).map(|m| m * a.x_min).unwrap_or(f64::NAN);
    println!("{}", serde_json::json!({ "fit": fit, "seed": a.seed, "expected_max": emax }));
    ExitCode::SUCCESS
}
