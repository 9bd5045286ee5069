use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use lacam_bench::runner::write_csv;
use lacam_bench::synth::write_benchmark;
use lacam_bench::{run_benchmark, validate_solution_file, BenchError, MapFamily, RunConfig};
use lacam_lg::{GoalWait, GuidanceMode, SuoParams};

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum GoalWaitArg {
    Free,
    Unit,
}

/// Run LaCAM (optionally guided, optionally anytime) over MovingAI
/// benchmark instances and write one CSV row per run.
#[derive(Debug, Parser)]
#[command(name = "lacam-bench", version)]
struct Cli {
    /// Map file (.map).
    #[arg(long, required_unless_present = "generate")]
    map: Option<PathBuf>,
    /// Scenario files (.scen); repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    scen: Vec<PathBuf>,
    /// Agent counts, e.g. 200,400.
    #[arg(long, value_delimiter = ',')]
    agents: Vec<usize>,
    /// Guidance modes: none, global, local, both (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "none")]
    guidance: Vec<GuidanceMode>,
    /// Local guidance window w.
    #[arg(long, default_value_t = 20)]
    window: usize,
    /// Collision penalty α.
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    /// Guidance sweeps per search node.
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    /// Guidance sweeps at the root node.
    #[arg(long, default_value_t = 2)]
    root_iterations: usize,
    /// Rebuild local guidance every K generations.
    #[arg(long, default_value_t = 1)]
    guidance_interval: usize,
    /// Cost of waiting at one's own goal inside the guidance window.
    #[arg(long, value_enum, default_value = "free")]
    goal_wait: GoalWaitArg,
    /// Global guidance: optimization passes.
    #[arg(long, default_value_t = 2)]
    suo_passes: usize,
    /// Global guidance: congestion weight.
    #[arg(long, default_value_t = 0.5)]
    suo_beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-instance time limit in milliseconds.
    #[arg(long, default_value_t = 30_000)]
    time_limit_ms: u64,
    /// Refine with LNS until the time limit.
    #[arg(long)]
    anytime: bool,
    /// LNS worker threads.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Stop LNS after this many proposals.
    #[arg(long)]
    lns_proposals: Option<u64>,
    /// Instances run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Result CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solution file: JSON, or text when the extension is .txt.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Heatmap file prefix.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    /// LNS trace file prefix.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Validate a solution file against --map and the first --scen, then exit.
    #[arg(long, value_name = "FILE")]
    validate_only: Option<PathBuf>,
    /// Write a synthetic benchmark (random-W-H-P or maze-W-H-C) to --out-dir and exit.
    #[arg(long, value_name = "FAMILY")]
    generate: Option<MapFamily>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Scenario files to generate.
    #[arg(long, default_value_t = 25)]
    instances: usize,
    /// Records per generated scenario.
    #[arg(long, default_value_t = 1000)]
    records: usize,
    /// Print a line per finished run to stderr.
    #[arg(long, short)]
    verbose: bool,
}

fn run(cli: Cli) -> Result<ExitCode, BenchError> {
    if let Some(family) = cli.generate {
        let (map, scens) =
            write_benchmark(&cli.out_dir, family, cli.instances, cli.records, cli.seed).map_err(
                |source| BenchError::Io {
                    path: cli.out_dir.clone(),
                    source,
                },
            )?;
        println!("{}", map.display());
        for s in scens {
            println!("{}", s.display());
        }
        return Ok(ExitCode::SUCCESS);
    }
    let map = cli.map.expect("clap enforces --map");
    if let Some(file) = &cli.validate_only {
        let scen = cli
            .scen
            .first()
            .ok_or_else(|| BenchError::Config("--validate-only needs --scen".into()))?;
        return Ok(match validate_solution_file(&map, scen, file)? {
            Ok(()) => {
                println!("valid");
                ExitCode::SUCCESS
            }
            Err(v) => {
                println!("invalid: {v}");
                ExitCode::from(1)
            }
        });
    }

    let cfg = RunConfig {
        map,
        scens: cli.scen,
        agents: cli.agents,
        modes: cli.guidance,
        window: cli.window,
        alpha: cli.alpha,
        iterations: cli.iterations,
        root_iterations: cli.root_iterations,
        guidance_interval: cli.guidance_interval,
        goal_wait: match cli.goal_wait {
            GoalWaitArg::Free => GoalWait::Free,
            GoalWaitArg::Unit => GoalWait::Unit,
        },
        suo: SuoParams {
            passes: cli.suo_passes,
            beta: cli.suo_beta,
        },
        seed: cli.seed,
        time_limit: Duration::from_millis(cli.time_limit_ms),
        anytime: cli.anytime,
        workers: cli.workers,
        lns_proposals: cli.lns_proposals,
        jobs: cli.jobs,
        solution: cli.solution,
        heatmap: cli.heatmap,
        trace: cli.trace,
        verbose: cli.verbose,
    };
    let out = run_benchmark(&cfg)?;
    match &cli.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|source| BenchError::Io {
                path: path.clone(),
                source,
            })?;
            write_csv(&out.rows, file)?;
        }
        None => write_csv(&out.rows, std::io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
