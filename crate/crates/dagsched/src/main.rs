//! Command-line frontend. Exit codes: 0 success, 1 domain error (infeasible
//! input, unknown method, failed validation), 2 I/O error (unreadable or
//! malformed files).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dagsched::bench::run_benchmark;
use dagsched::datagen::{
    augment_heterogeneous, gen_dag, gen_durations_gmm, ldd_matrix, DagKind, HetProfile,
    DEFAULT_D_MAX,
};
use dagsched::genmaps::{
    rollout_skip_extended, sgs, Mode, PolicyConfig, ScoreTable,
};
use dagsched::heuristics::{
    run_insertion_heuristic, run_list_heuristic, InsertionVariant, PoolRule, PriorityRule,
};
use dagsched::milp::{export_milp, MilpMode, DEFAULT_EPS_STRICT};
use dagsched::model::{check_schedule, makespan, validate_instance, Instance, Schedule, Verdict};
use dagsched::orderspace::{ScheduleOrder, DEFAULT_ENUM_CAP};
use dagsched::search::{brute_force_optimum, local_search, optimality_gap, GapKind};

#[derive(Parser)]
#[command(name = "dagsched", about = "Heterogeneous DAG scheduling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GapMap {
    List,
    Sgs,
    Skip,
}

#[derive(Clone, Copy, ValueEnum)]
enum SkipMode {
    Greedy,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum MilpModeArg {
    Hom,
    Het,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Er,
    Sbm,
    Layered,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file against all model invariants.
    Validate { instance: PathBuf },
    /// Produce a schedule with the selected method.
    Solve {
        /// list:<prule>:<poolrule> | heft | peft | ippts | sgs | skip
        #[arg(long)]
        method: String,
        /// Schedule-order file (sgs method).
        #[arg(long)]
        order: Option<PathBuf>,
        /// Score-table file (skip method).
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Rollout policy (skip method).
        #[arg(long, value_enum, default_value = "greedy")]
        mode: SkipMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        instance: PathBuf,
    },
    /// Exact optimum by exhaustive search (small instances).
    Oracle { instance: PathBuf },
    /// Optimality gap of a generation map on a small instance.
    Gap {
        #[arg(long, value_enum)]
        map: GapMap,
        instance: PathBuf,
    },
    /// Local search over schedule orders from an initial schedule.
    Localsearch {
        #[arg(long)]
        init: PathBuf,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        instance: PathBuf,
    },
    /// Emit the mixed-integer formulation as an LP file on stdout.
    ExportMilp {
        #[arg(long, value_enum)]
        mode: MilpModeArg,
        /// Slack used to render strict inequalities.
        #[arg(long, default_value_t = DEFAULT_EPS_STRICT)]
        eps: f64,
        instance: PathBuf,
    },
    /// Generate a random instance and print it as JSON.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Heterogeneity profile JSON; defaults to the built-in
        /// computation-graph profile.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Erdős–Rényi edge probability.
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        #[arg(long, default_value_t = 0.3)]
        p_in: f64,
        #[arg(long, default_value_t = 0.005)]
        p_out: f64,
        #[arg(long, default_value_t = 0.75)]
        sigma_n: f64,
        #[arg(long, default_value_t = 0.2)]
        rho_e: f64,
        #[arg(long, default_value_t = 0.14)]
        rho_s: f64,
    },
    /// Folded longest-directed-distance matrix of an instance.
    Ldd {
        #[arg(long, default_value_t = DEFAULT_D_MAX)]
        dmax: i64,
        #[arg(long, value_enum, default_value = "json")]
        format: MatrixFormat,
        instance: PathBuf,
    },
    /// Run methods over a directory of instance files.
    Bench {
        #[arg(long)]
        instances: PathBuf,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the report as CSV on stdout.
        #[arg(long)]
        csv: bool,
        /// Record wall-clock timings (makes the report non-reproducible).
        #[arg(long)]
        timed: bool,
    },
}

/// Error carrying the intended process exit code.
struct CliError {
    code: u8,
    message: String,
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError { code: 1, message: e.to_string() }
}

fn io<E: std::fmt::Display>(path: &Path, e: E) -> CliError {
    CliError { code: 2, message: format!("{}: {e}", path.display()) }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    serde_json::from_str(&text).map_err(|e| io(path, e))
}

fn print_schedule(inst: &Instance, x: &Schedule) -> Result<(), CliError> {
    let out = serde_json::json!({
        "makespan": makespan(inst, x).map_err(domain)?,
        "schedule": x,
    });
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}

fn parse_method(
    inst: &Instance,
    method: &str,
    order: Option<&Path>,
    scores: Option<&Path>,
    mode: SkipMode,
    seed: u64,
) -> Result<Schedule, CliError> {
    if let Some(rest) = method.strip_prefix("list:") {
        let mut parts = rest.split(':');
        let prule = match parts.next() {
            Some("sft") => PriorityRule::Sft,
            Some("mopnr") => PriorityRule::Mopnr,
            Some("cp") => PriorityRule::Cp,
            Some("tetris") => PriorityRule::Tetris,
            other => return Err(domain(format!("unknown priority rule {other:?}"))),
        };
        let poolrule = match parts.next() {
            Some("eft") => PoolRule::Eft,
            Some("tetris") => PoolRule::TetrisScore,
            Some("balance") => PoolRule::Balance,
            other => return Err(domain(format!("unknown pool rule {other:?}"))),
        };
        return run_list_heuristic(inst, prule, poolrule).map_err(domain);
    }
    match method {
        "heft" => run_insertion_heuristic(inst, InsertionVariant::Heft).map_err(domain),
        "peft" => run_insertion_heuristic(inst, InsertionVariant::Peft).map_err(domain),
        "ippts" => run_insertion_heuristic(inst, InsertionVariant::Ippts).map_err(domain),
        "sgs" => {
            let path = order.ok_or_else(|| domain("sgs requires --order"))?;
            let w: ScheduleOrder = read_json(path)?;
            sgs(inst, &w).map_err(domain)
        }
        "skip" => {
            let path = scores.ok_or_else(|| domain("skip requires --scores"))?;
            let table: ScoreTable = read_json(path)?;
            let cfg = PolicyConfig {
                mode: match mode {
                    SkipMode::Greedy => Mode::Greedy,
                    SkipMode::Sample => Mode::Sampling,
                },
                seed,
            };
            rollout_skip_extended(inst, &table, cfg)
                .map(|(x, _)| x)
                .map_err(domain)
        }
        other => Err(domain(format!("unknown method {other:?}"))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { instance } => {
            let inst: Instance = read_json(&instance)?;
            let report = validate_instance(&inst);
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            if !report.is_valid() {
                return Err(domain("instance is invalid"));
            }
        }
        Command::Solve { method, order, scores, mode, seed, instance } => {
            let inst: Instance = read_json(&instance)?;
            let x = parse_method(&inst, &method, order.as_deref(), scores.as_deref(), mode, seed)?;
            if let Verdict::Infeasible(why) = check_schedule(&inst, &x) {
                return Err(domain(format!("produced schedule is infeasible: {why}")));
            }
            print_schedule(&inst, &x)?;
        }
        Command::Oracle { instance } => {
            let inst: Instance = read_json(&instance)?;
            let (x, m) = brute_force_optimum(&inst, DEFAULT_ENUM_CAP).map_err(domain)?;
            let out = serde_json::json!({ "makespan": m, "schedule": x });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
        Command::Gap { map, instance } => {
            let inst: Instance = read_json(&instance)?;
            let kind = match map {
                GapMap::List => GapKind::List,
                GapMap::Sgs => GapKind::Sgs,
                GapMap::Skip => GapKind::SkipExtended,
            };
            let gap = optimality_gap(&inst, kind, DEFAULT_ENUM_CAP).map_err(domain)?;
            println!("{gap}");
        }
        Command::Localsearch { init, steps, instance } => {
            let inst: Instance = read_json(&instance)?;
            let x0: Schedule = read_json(&init)?;
            if let Verdict::Infeasible(why) = check_schedule(&inst, &x0) {
                return Err(domain(format!("initial schedule is infeasible: {why}")));
            }
            let x = local_search(&inst, &x0, steps).map_err(domain)?;
            print_schedule(&inst, &x)?;
        }
        Command::ExportMilp { mode, eps, instance } => {
            let inst: Instance = read_json(&instance)?;
            let mode = match mode {
                MilpModeArg::Hom => MilpMode::Homogeneous,
                MilpModeArg::Het => MilpMode::Heterogeneous,
            };
            let text = export_milp(&inst, mode, eps).map_err(domain)?;
            print!("{text}");
        }
        Command::Gen {
            kind, n, seed, profile, p, p_in, p_out, sigma_n, rho_e, rho_s,
        } => {
            let kind = match kind {
                GenKind::Er => DagKind::ErdosRenyi { p },
                GenKind::Sbm => DagKind::StochasticBlock { p_in, p_out },
                GenKind::Layered => DagKind::Layered { sigma_n, rho_e, rho_s },
            };
            let profile: HetProfile = match profile {
                Some(path) => read_json(&path)?,
                None => HetProfile::computation_graph(),
            };
            let edges = gen_dag(kind, n, seed).map_err(domain)?;
            let durations = gen_durations_gmm(n, seed);
            let inst = augment_heterogeneous(&edges, &durations, &profile, seed).map_err(domain)?;
            println!("{}", serde_json::to_string_pretty(&inst).unwrap());
        }
        Command::Ldd { dmax, format, instance } => {
            let inst: Instance = read_json(&instance)?;
            let m = ldd_matrix(&inst, dmax);
            match format {
                MatrixFormat::Json => {
                    println!("{}", serde_json::to_string(&m).unwrap());
                }
                MatrixFormat::Csv => {
                    for row in &m {
                        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                        println!("{}", cells.join(","));
                    }
                }
            }
        }
        Command::Bench { instances, methods, samples, seeds, out, csv, timed } => {
            let mut entries = Vec::new();
            let dir = std::fs::read_dir(&instances).map_err(|e| io(&instances, e))?;
            let mut paths: Vec<PathBuf> = dir
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for path in paths {
                let inst: Instance = read_json(&path)?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                entries.push((name, inst));
            }
            let report =
                run_benchmark(&entries, &methods, samples, &seeds, timed).map_err(domain)?;
            let text = serde_json::to_string_pretty(&report).unwrap();
            match &out {
                Some(path) => std::fs::write(path, &text).map_err(|e| io(path, e))?,
                None => println!("{text}"),
            }
            if csv {
                print!("{}", report.to_csv());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
