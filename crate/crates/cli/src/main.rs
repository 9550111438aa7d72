mod error;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use peierls_core::bounds::{BoundReport, Counts, TruncatedPolynomial};
use peierls_core::counts::{ContourInventory, CountTable, ExactCounts, InventoryOptions};
use peierls_core::monte_carlo::{estimate_crossing, estimate_origin_reach, estimate_threshold, McEstimate};
use peierls_core::walks::{self_avoiding_circuit_count, ContinuationRule};

use crate::error::CliError;
use crate::output::{changed_files, csv_bytes, json_bytes, read_manifest, RunManifest, Sink};

#[derive(Parser, Debug)]
#[command(name = "peierls", version, about = "Contour counts, Peierls bounds and percolation simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count outer-boundary contours around the origin by length and class.
    Counts(CountsArgs),
    /// Evaluate the Peierls sum, its tail, the threshold bound and Q_r(c).
    Bounds(BoundsArgs),
    /// Monte Carlo estimates in a finite window, or a threshold bisection.
    Simulate(SimulateArgs),
    /// Check a run manifest against its files, or rerun it.
    Manifest(ManifestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Rule {
    Five,
    Seven,
}

impl From<Rule> for ContinuationRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Five => ContinuationRule::Five,
            Rule::Seven => ContinuationRule::Seven,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Analytic,
    Exact,
    Sa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Observable {
    Reach,
    Crossing,
}

#[derive(Args, Debug)]
struct CountsArgs {
    /// Largest contour length to count (at least 4).
    #[arg(long)]
    k_max: usize,
    /// Continuation rule for the self-avoiding circuit search.
    #[arg(long, value_enum, default_value_t = Rule::Five)]
    rule: Rule,
    /// Cluster-size cap; smaller than the complete cap only if raising it by
    /// 2 finds nothing new.
    #[arg(long)]
    max_size: Option<usize>,
    /// Stop with exit code 3 after visiting this many clusters.
    #[arg(long, default_value_t = 200_000_000)]
    max_clusters: u64,
    /// Directory for counts.csv, classes.csv (or counts.json) and the
    /// manifest. Without it the count table goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("where").required(true).args(["c", "sweep"])))]
struct BoundsArgs {
    /// Concentration.
    #[arg(long)]
    c: Option<f64>,
    /// Sweep `c0:c1:step`, endpoints included.
    #[arg(long)]
    sweep: Option<String>,
    /// Truncation length: contours shorter than r are summed exactly.
    #[arg(long, default_value_t = 5)]
    r: usize,
    #[arg(long, value_enum, default_value_t = Mode::Analytic)]
    mode: Mode,
    /// Contour length up to which counts are enumerated in exact and sa modes.
    #[arg(long, default_value_t = 12)]
    k_max: usize,
    #[arg(long, default_value_t = 200_000_000)]
    max_clusters: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("what").required(true).args(["c", "bisect"])))]
struct SimulateArgs {
    /// Window radius; the window has (2L+1)^2 sites.
    #[arg(long = "L")]
    radius: u32,
    /// Concentrations, comma separated.
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    /// Bisect for the concentration where the crossing probability is 1/2.
    #[arg(long)]
    bisect: bool,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bisection stops once the bracket is narrower than this.
    #[arg(long, default_value_t = 0.005)]
    tol: f64,
    /// Event estimated at each concentration.
    #[arg(long, value_enum, default_value_t = Observable::Reach)]
    observable: Observable,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("action").required(true).args(["verify", "rerun"])))]
struct ManifestArgs {
    /// A manifest.json file or the directory holding it.
    path: PathBuf,
    /// Compare the recorded digests with the files on disk.
    #[arg(long)]
    verify: bool,
    /// Run the recorded command again into a scratch directory and compare
    /// digests.
    #[arg(long)]
    rerun: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// What a command contributes to its manifest.
struct RunInfo {
    seeds: Vec<u64>,
    caps: serde_json::Value,
    rule: Option<String>,
}

fn version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

fn run_counts(a: &CountsArgs, sink: &mut Sink) -> Result<RunInfo, CliError> {
    let opts = InventoryOptions {
        max_size: a.max_size,
        max_clusters: Some(a.max_clusters),
    };
    if a.k_max < 4 {
        return Err(CliError::Argument(format!("--k-max must be at least 4, got {}", a.k_max)));
    }
    let inventory = ContourInventory::build(a.k_max, opts)?;
    let walks = self_avoiding_circuit_count(a.k_max, a.rule.into())?;
    let table = CountTable::assemble(&ExactCounts::from_inventory(&inventory), &walks);

    match a.format {
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                k: usize,
                exact: u64,
                sa_walk: u64,
                walk_bound: String,
            }
            let rows = table.rows.iter().map(|r| Row {
                k: r.k,
                exact: r.exact,
                sa_walk: r.sa_walk,
                walk_bound: r.walk_bound.to_string(),
            });
            sink.emit("counts.csv", &csv_bytes(rows)?, true)?;
            sink.emit("classes.csv", &csv_bytes(&table.classes)?, false)?;
        }
        Format::Json => {
            let doc = json!({
                "metadata": {
                    "version": version(),
                    "k_max": table.k_max,
                    "rule": table.rule,
                    "max_cluster_size": table.max_cluster_size,
                    "max_span": table.max_span,
                    "clusters_visited": table.clusters_visited,
                    "self_avoiding_nodes": walks.nodes,
                },
                "rows": table.rows,
                "classes": table.classes,
            });
            sink.emit("counts.json", &json_bytes(&doc)?, true)?;
        }
    }
    Ok(RunInfo {
        seeds: vec![],
        caps: json!({
            "k_max": a.k_max,
            "max_cluster_size": table.max_cluster_size,
            "max_span": table.max_span,
            "max_clusters": a.max_clusters,
        }),
        rule: Some(table.rule.name().to_string()),
    })
}

fn parse_sweep(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Argument(format!("--sweep expects c0:c1:step, got {text:?}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [c0, c1, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(c0 <= c1) {
        return Err(bad());
    }
    let n = ((c1 - c0) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(CliError::Argument(format!("--sweep would produce {n} points")));
    }
    // Round to the step's decimal precision so printed values stay clean.
    Ok((0..n).map(|i| ((c0 + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn run_bounds(a: &BoundsArgs, sink: &mut Sink) -> Result<RunInfo, CliError> {
    let cs = match (&a.sweep, a.c) {
        (Some(s), _) => parse_sweep(s)?,
        (None, Some(c)) => vec![c],
        (None, None) => unreachable!("clap requires --c or --sweep"),
    };
    if let Some(c) = cs.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(CliError::Argument(format!("concentration {c} outside [0, 1]")));
    }
    if a.r < 4 {
        return Err(CliError::Argument(format!("--r must be at least 4, got {}", a.r)));
    }
    let table_mode = a.mode != Mode::Analytic;
    let k_inv = if table_mode { a.k_max.max(a.r - 1) } else { a.r - 1 }.max(4);
    let opts = InventoryOptions {
        max_size: None,
        max_clusters: Some(a.max_clusters),
    };
    let inventory = ContourInventory::build(k_inv, opts)?;
    let poly = TruncatedPolynomial::from_inventory(&inventory, a.r)?;
    let table = if table_mode {
        if a.k_max < 4 {
            return Err(CliError::Argument(format!("--k-max must be at least 4, got {}", a.k_max)));
        }
        let walks = self_avoiding_circuit_count(a.k_max, ContinuationRule::Five)?;
        let mut exact = ExactCounts::from_inventory(&inventory);
        exact.k_max = a.k_max;
        exact.counts.truncate(a.k_max + 1);
        exact.classes.retain(|(k, _), _| *k <= a.k_max);
        Some(CountTable::assemble(&exact, &walks))
    } else {
        None
    };
    let counts = match (a.mode, &table) {
        (Mode::Analytic, _) => Counts::Analytic,
        (Mode::Exact, Some(t)) => Counts::Exact(t),
        (Mode::Sa, Some(t)) => Counts::SelfAvoiding(t),
        _ => unreachable!("table built for table modes"),
    };
    let reports: Vec<BoundReport> = cs
        .iter()
        .map(|&c| BoundReport::new(c, &poly, counts))
        .collect::<Result<_, _>>()?;

    match a.format {
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                c: f64,
                r: usize,
                mode: &'a str,
                q_truncated: f64,
                tail: Option<f64>,
                q_lower: Option<f64>,
                series_bound: Option<f64>,
                threshold_bound: f64,
                guarantee: &'a str,
            }
            let rows = reports.iter().map(|b| Row {
                c: b.c,
                r: b.r,
                mode: &b.mode,
                q_truncated: b.q_truncated,
                tail: b.tail,
                q_lower: b.q_lower,
                series_bound: b.series_bound,
                threshold_bound: b.threshold_bound,
                guarantee: if b.guarantee { "guaranteed" } else { "none" },
            });
            sink.emit("bounds.csv", &csv_bytes(rows)?, true)?;
        }
        Format::Json => {
            let doc = json!({
                "metadata": {
                    "version": version(),
                    "mode": counts.mode(),
                    "r": a.r,
                    "k_max": table.as_ref().map(|t| t.k_max),
                    "contours_in_polynomial": poly.contours,
                },
                "reports": reports,
            });
            sink.emit("bounds.json", &json_bytes(&doc)?, true)?;
        }
    }
    Ok(RunInfo {
        seeds: vec![],
        caps: json!({
            "r": a.r,
            "k_max": table.as_ref().map(|t| t.k_max),
            "inventory_k_max": k_inv,
            "max_clusters": a.max_clusters,
        }),
        rule: table.map(|t| t.rule.name().to_string()),
    })
}

fn run_simulate(a: &SimulateArgs, sink: &mut Sink) -> Result<RunInfo, CliError> {
    if a.bisect {
        let est = estimate_threshold(a.radius, a.trials, a.tol, a.seed)?;
        match a.format {
            Format::Csv => {
                #[derive(Serialize)]
                struct Row {
                    step: usize,
                    lo: f64,
                    hi: f64,
                    #[serde(rename = "L")]
                    radius: u32,
                    c: f64,
                    trials: u64,
                    value: f64,
                    std_error: f64,
                    seed: u64,
                }
                let rows = est.steps.iter().enumerate().map(|(i, s)| Row {
                    step: i + 1,
                    lo: s.lo,
                    hi: s.hi,
                    radius: s.estimate.radius,
                    c: s.estimate.c,
                    trials: s.estimate.trials,
                    value: s.estimate.value,
                    std_error: s.estimate.std_error,
                    seed: s.estimate.seed,
                });
                sink.emit("bisect.csv", &csv_bytes(rows)?, true)?;
                eprintln!("threshold {} (bracket [{}, {}])", est.value, est.lo, est.hi);
            }
            Format::Json => {
                let doc = json!({
                    "metadata": {"version": version(), "observable": Observable::Crossing, "L": a.radius},
                    "threshold": est,
                });
                sink.emit("bisect.json", &json_bytes(&doc)?, true)?;
            }
        }
    } else {
        let estimates: Vec<McEstimate> = a
            .c
            .iter()
            .map(|&c| match a.observable {
                Observable::Reach => estimate_origin_reach(a.radius, c, a.trials, a.seed),
                Observable::Crossing => estimate_crossing(a.radius, c, a.trials, a.seed),
            })
            .collect::<Result<_, _>>()?;
        match a.format {
            Format::Csv => sink.emit("simulate.csv", &csv_bytes(&estimates)?, true)?,
            Format::Json => {
                let doc = json!({
                    "metadata": {"version": version(), "observable": a.observable},
                    "estimates": estimates,
                });
                sink.emit("simulate.json", &json_bytes(&doc)?, true)?;
            }
        }
    }
    Ok(RunInfo {
        seeds: vec![a.seed],
        caps: json!({"L": a.radius, "trials": a.trials, "tol": a.bisect.then_some(a.tol)}),
        rule: None,
    })
}

fn replace_out(command: &[String], dir: &Path) -> Result<Vec<String>, CliError> {
    let mut out = Vec::with_capacity(command.len());
    let mut found = false;
    let mut iter = command.iter();
    while let Some(arg) = iter.next() {
        if arg == "--out" {
            iter.next();
            found = true;
        } else if arg.starts_with("--out=") {
            found = true;
        } else {
            out.push(arg.clone());
            continue;
        }
        out.push("--out".into());
        out.push(dir.to_string_lossy().into_owned());
    }
    if !found {
        return Err(CliError::Argument("recorded command has no --out".into()));
    }
    Ok(out)
}

fn run_manifest(a: &ManifestArgs) -> Result<(), CliError> {
    let (dir, manifest) = read_manifest(&a.path)?;
    let (target, scratch) = if a.rerun {
        let scratch = std::env::temp_dir().join(format!("peierls-rerun-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&scratch);
        let mut argv = vec!["peierls".to_string()];
        argv.extend(replace_out(&manifest.command, &scratch)?);
        let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Argument(e.to_string()))?;
        if matches!(cli.command, Command::Manifest(_)) {
            return Err(CliError::Argument("a manifest cannot rerun a manifest".into()));
        }
        execute(cli, argv[1..].to_vec())?;
        (scratch.clone(), Some(scratch))
    } else {
        (dir, None)
    };
    let changed = changed_files(&target, &manifest.files);
    if let Some(s) = scratch {
        let _ = std::fs::remove_dir_all(s);
    }
    #[derive(Serialize)]
    struct Row<'a> {
        file: &'a str,
        sha256: &'a str,
        status: &'a str,
    }
    let rows: Vec<Row> = manifest
        .files
        .iter()
        .map(|f| Row {
            file: &f.name,
            sha256: &f.sha256,
            status: if changed.contains(&f.name) { "mismatch" } else { "ok" },
        })
        .collect();
    let bytes = match a.format {
        Format::Csv => csv_bytes(&rows)?,
        Format::Json => json_bytes(&rows)?,
    };
    use std::io::Write;
    std::io::stdout().write_all(&bytes)?;
    if changed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("digest mismatch: {}", changed.join(", "))))
    }
}

fn execute(cli: Cli, command: Vec<String>) -> Result<(), CliError> {
    let start = Instant::now();
    let (out, result) = match &cli.command {
        Command::Manifest(a) => return run_manifest(a),
        Command::Counts(a) => {
            let mut sink = Sink::new(a.out.clone())?;
            let info = run_counts(a, &mut sink);
            (sink, info)
        }
        Command::Bounds(a) => {
            let mut sink = Sink::new(a.out.clone())?;
            let info = run_bounds(a, &mut sink);
            (sink, info)
        }
        Command::Simulate(a) => {
            let mut sink = Sink::new(a.out.clone())?;
            let info = run_simulate(a, &mut sink);
            (sink, info)
        }
    };
    let info = result?;
    out.finish(RunManifest {
        version: version(),
        command,
        seeds: info.seeds,
        caps: info.caps,
        rule: info.rule,
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files: vec![],
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("PEIERLS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Argument(format!("PEIERLS_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    let result = configure_threads().and_then(|()| execute(cli, argv[1..].to_vec()));
    if let Err(e) = result {
        eprintln!("peierls: {e}");
        std::process::exit(e.exit_code());
    }
}
