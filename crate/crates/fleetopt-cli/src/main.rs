//! Command-line front end: loads or generates instances, runs any solver
//! mode, and writes solution documents and incumbent traces.

mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fleetopt::generator::{generate_instance, GeneratorParams};
use fleetopt::hybrid::{run_hybrid, HybridConfig, Mode};
use fleetopt::instance::{from_json_str, save_instance, ProblemInstance};
use fleetopt::solution::validate_solution;

use output::{digest_hex, RunResult};

#[derive(Parser)]
#[command(name = "fleetopt", version, about = "Fleet size and mix solver for time-windowed pickup and delivery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file and write the result document.
    Solve(SolveArgs),
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Run a seeded suite across modes and print a comparison table.
    Bench(BenchArgs),
    /// Check a result document against its instance from first principles.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fco,
    Uct,
    Hybrid,
}

impl From<ModeArg> for Mode {
    fn from(mode: ModeArg) -> Mode {
        match mode {
            ModeArg::Fco => Mode::FcoOnly,
            ModeArg::Uct => Mode::UctOnly,
            ModeArg::Hybrid => Mode::Hybrid,
        }
    }
}

impl std::fmt::Display for ModeArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModeArg::Fco => "fco",
            ModeArg::Uct => "uct",
            ModeArg::Hybrid => "hybrid",
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Hybrid)]
    mode: ModeArg,
    /// Instance file to solve.
    #[arg(long)]
    instance: PathBuf,
    /// Wall-clock budget in seconds; omit to run until the proof completes.
    #[arg(long)]
    budget: Option<f64>,
    /// Assignment-search workers.
    #[arg(long, env = "FLEETOPT_THREADS", default_value_t = 1)]
    workers: usize,
    /// Seed for the sampling search.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds the exact search waits for the first fleet recommendation.
    #[arg(long)]
    warm_start_timeout: Option<f64>,
    /// Per-route solve cap in seconds; caps forfeit the optimality proof.
    #[arg(long)]
    tsptw_cap: Option<f64>,
    /// Reward normalization constant, or `auto` to derive it.
    #[arg(long, default_value = "auto")]
    gmax: String,
    /// Where to write the result document.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the incumbent trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Number of pickup-and-delivery tasks.
    #[arg(long)]
    tasks: usize,
    /// Number of robot types; defaults to the length of --kmax.
    #[arg(long)]
    types: Option<usize>,
    /// Per-type fleet bounds, comma-separated (e.g. 2,2,2).
    #[arg(long)]
    kmax: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Half-width of every task window around its reference visit time.
    #[arg(long, default_value_t = 120.0)]
    wiggle: f64,
    /// Side length of the square service area.
    #[arg(long, default_value_t = 100.0)]
    area: f64,
    /// Where to write the instance file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance shape preset.
    #[arg(long, value_enum, default_value_t = Suite::Small)]
    suite: Suite,
    /// Number of seeded instances (seeds 0..N).
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Modes to compare, comma-separated; the first is the baseline.
    #[arg(long, value_delimiter = ',', default_value = "fco,hybrid")]
    modes: Vec<ModeArg>,
    /// Wall-clock budget per run in seconds.
    #[arg(long, default_value_t = 60.0)]
    budget: f64,
    #[arg(long, env = "FLEETOPT_THREADS", default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    /// 6 tasks, 2 types, caps [2,2].
    Small,
    /// 10 tasks, 3 types, caps [2,2,2].
    Medium,
}

#[derive(Args)]
struct ValidateArgs {
    /// Instance file the result claims to solve.
    #[arg(long)]
    instance: PathBuf,
    /// Result document produced by `solve --out`.
    #[arg(long)]
    result: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Let clap print help/version normally; real usage errors exit 1.
            if err.use_stderr() {
                eprintln!("{err}");
                return ExitCode::from(1);
            }
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Gen(args) => gen(args),
        Command::Bench(args) => bench(args),
        Command::Validate(args) => validate(args),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn read_instance(path: &PathBuf) -> Result<(ProblemInstance, String), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let text = String::from_utf8(bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    let instance = from_json_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((instance, digest_hex(text.as_bytes())))
}

fn parse_gmax(raw: &str) -> Result<Option<f64>, String> {
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    let value: f64 = raw.parse().map_err(|_| format!("--gmax expects a number or `auto`, got `{raw}`"))?;
    if !value.is_finite() || value <= 0.0 {
        return Err(format!("--gmax must be positive and finite, got {value}"));
    }
    Ok(Some(value))
}

fn solve(args: SolveArgs) -> Result<ExitCode, String> {
    let (instance, digest) = read_instance(&args.instance)?;
    let g_max = parse_gmax(&args.gmax)?;
    let mut config = HybridConfig {
        mode: args.mode.into(),
        budget: args.budget.map(Duration::from_secs_f64),
        workers: args.workers,
        seed: args.seed,
        g_max,
        tsptw_time_cap: args.tsptw_cap.map(Duration::from_secs_f64),
        ..Default::default()
    };
    if let Some(wait) = args.warm_start_timeout {
        config.warm_start_timeout = Duration::from_secs_f64(wait);
    }
    let report = run_hybrid(&instance, &config).map_err(|e| e.to_string())?;

    let result = RunResult::from_report(args.mode.to_string(), digest, &report);
    if let Some(path) = &args.out {
        let doc = serde_json::to_string_pretty(&result).expect("result document serializes");
        std::fs::write(path, doc).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = &args.trace {
        let csv = output::trace_csv(&report);
        std::fs::write(path, csv).map_err(|e| format!("{}: {e}", path.display()))?;
    }

    match &report.best {
        Some(best) => {
            println!(
                "{}: cost {} (fixed {} + routes {}), fleet {:?}, {} in {:.2}s",
                args.mode,
                best.total_cost,
                best.fixed_cost,
                best.route_cost,
                best.fleet,
                if report.proven_optimal { "proven optimal" } else { "not proven" },
                report.elapsed.as_secs_f64(),
            );
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!(
                "{}: no solution found in {:.2}s",
                args.mode,
                report.elapsed.as_secs_f64()
            );
            Ok(ExitCode::from(2))
        }
    }
}

fn gen(args: GenArgs) -> Result<ExitCode, String> {
    let max_counts: Vec<u32> = args
        .kmax
        .split(',')
        .map(|part| part.trim().parse::<u32>().map_err(|_| format!("--kmax entry `{part}` is not a count")))
        .collect::<Result<_, _>>()?;
    let n_types = args.types.unwrap_or(max_counts.len());
    if n_types != max_counts.len() {
        return Err(format!(
            "--types {} disagrees with --kmax ({} entries)",
            n_types,
            max_counts.len()
        ));
    }
    let params = GeneratorParams {
        n_tasks: args.tasks,
        n_types,
        max_counts,
        window_wiggle: args.wiggle,
        area: args.area,
        seed: args.seed,
    };
    let instance = generate_instance(&params).map_err(|e| e.to_string())?;
    save_instance(&instance, &args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    println!(
        "wrote {} ({} tasks, {} types, caps {:?}, seed {})",
        args.out.display(),
        instance.tasks.len(),
        instance.amr_types.len(),
        instance.k_max(),
        args.seed,
    );
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode, String> {
    if args.modes.is_empty() {
        return Err("--modes needs at least one mode".into());
    }
    let (n_tasks, max_counts, wiggle) = match args.suite {
        Suite::Small => (6, vec![2u32, 2], 45.0),
        Suite::Medium => (10, vec![2u32, 2, 2], 180.0),
    };
    println!(
        "suite {}: {} tasks, caps {:?}, seeds 0..{}, budget {}s, workers {}",
        match args.suite {
            Suite::Small => "small",
            Suite::Medium => "medium",
        },
        n_tasks,
        max_counts,
        args.seeds,
        args.budget,
        args.workers,
    );
    println!("t is time to proof for exact modes, time to best otherwise; * marks unproven runs");

    let mut header = String::from("seed");
    for mode in &args.modes {
        let _ = write!(header, "  {:>12} {:>9}", format!("{mode}_cost"), "t(s)");
    }
    let _ = write!(header, "  {:>10}", "reduction");
    println!("{header}");

    let mut times: Vec<Vec<f64>> = vec![Vec::new(); args.modes.len()];
    for seed in 0..args.seeds {
        let params = GeneratorParams {
            n_tasks,
            n_types: max_counts.len(),
            max_counts: max_counts.clone(),
            window_wiggle: wiggle,
            area: 100.0,
            seed,
        };
        let instance = generate_instance(&params).map_err(|e| e.to_string())?;
        let mut row = format!("{seed:>4}");
        let mut row_times = Vec::new();
        for (i, mode) in args.modes.iter().enumerate() {
            let config = HybridConfig {
                mode: (*mode).into(),
                budget: Some(Duration::from_secs_f64(args.budget)),
                workers: args.workers,
                seed,
                ..Default::default()
            };
            let report = run_hybrid(&instance, &config).map_err(|e| e.to_string())?;
            let t = if report.proven_optimal {
                report.elapsed.as_secs_f64()
            } else {
                report.trace.last().map_or(report.elapsed.as_secs_f64(), |e| e.elapsed_seconds)
            };
            times[i].push(t);
            row_times.push(t);
            match &report.best {
                Some(best) => {
                    let mark = if report.proven_optimal { ' ' } else { '*' };
                    let _ = write!(row, "  {:>12.4} {:>8.2}{mark}", best.total_cost, t);
                }
                None => {
                    let _ = write!(row, "  {:>12} {:>8.2}*", "-", t);
                }
            }
        }
        if row_times.len() > 1 {
            let reduction = 100.0 * (1.0 - row_times[row_times.len() - 1] / row_times[0]);
            let _ = write!(row, "  {:>9.1}%", reduction);
        }
        println!("{row}");
    }

    let mut summary = String::from("median t");
    for per_mode in &times {
        let _ = write!(summary, "  {:>22.2}", median(per_mode));
    }
    if times.len() > 1 {
        let reduction = 100.0 * (1.0 - median(times.last().expect("nonempty")) / median(&times[0]));
        let _ = write!(summary, "  {:>9.1}%", reduction);
    }
    println!("{summary}");
    Ok(ExitCode::SUCCESS)
}

fn median(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn validate(args: ValidateArgs) -> Result<ExitCode, String> {
    let (instance, digest) = read_instance(&args.instance)?;
    let text = std::fs::read_to_string(&args.result)
        .map_err(|e| format!("{}: {e}", args.result.display()))?;
    let result: RunResult = serde_json::from_str(&text)
        .map_err(|e| format!("{}: {e}", args.result.display()))?;

    if result.instance_digest != digest {
        println!(
            "digest mismatch: result was produced from {}, this file is {}",
            result.instance_digest, digest
        );
        return Ok(ExitCode::from(2));
    }
    let Some(solution) = &result.solution else {
        println!("result records no solution; nothing to replay");
        return Ok(ExitCode::from(2));
    };
    if let Err(err) = validate_solution(&instance, solution) {
        println!("stored solution fails replay: {err}");
        return Ok(ExitCode::from(2));
    }
    if result.best_cost != Some(solution.total_cost) {
        println!(
            "stored best cost {:?} differs from the solution's total {}",
            result.best_cost, solution.total_cost
        );
        return Ok(ExitCode::from(2));
    }
    println!(
        "ok: {} tasks on fleet {:?}, cost {} reproduced exactly",
        instance.tasks.len(),
        solution.fleet,
        solution.total_cost
    );
    Ok(ExitCode::SUCCESS)
}
