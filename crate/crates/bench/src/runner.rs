use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use lacam_lg::anytime::trace_csv;
use lacam_lg::instance::{parse_scenario_records, ScenarioRecord};
use lacam_lg::{
    compute_metrics, refine, validate, Deadline, GoalWait, Grid, GuidanceMode, GuidanceParams,
    Instance, LnsOptions, MapError, ScenarioError, SolveError, Solver, SolverOptions, SuoParams,
};
use serde::Serialize;

use crate::output;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Map { path: PathBuf, source: MapError },
    #[error("{path}: {source}")]
    Scenario {
        path: PathBuf,
        source: ScenarioError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {reason}")]
    SolutionFormat { path: PathBuf, reason: String },
}

pub(crate) fn read_file(path: &Path) -> Result<String, BenchError> {
    std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<(), BenchError> {
    std::fs::write(path, contents).map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })
}

/// One benchmark matrix.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub map: PathBuf,
    pub scens: Vec<PathBuf>,
    pub agents: Vec<usize>,
    pub modes: Vec<GuidanceMode>,
    pub window: usize,
    pub alpha: f64,
    pub iterations: usize,
    pub root_iterations: usize,
    /// Rebuild local guidance every this many generations.
    pub guidance_interval: usize,
    pub goal_wait: GoalWait,
    pub suo: SuoParams,
    pub seed: u64,
    pub time_limit: Duration,
    pub anytime: bool,
    pub workers: usize,
    /// Stop LNS after this many proposals even if time remains.
    pub lns_proposals: Option<u64>,
    pub jobs: usize,
    pub solution: Option<PathBuf>,
    pub heatmap: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    /// Print one line per finished run to stderr.
    pub verbose: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GuidanceParams::default();
        Self {
            map: PathBuf::new(),
            scens: Vec::new(),
            agents: Vec::new(),
            modes: vec![GuidanceMode::None],
            window: g.window,
            alpha: g.alpha,
            iterations: g.iterations,
            root_iterations: g.root_iterations,
            guidance_interval: 1,
            goal_wait: g.goal_wait,
            suo: SuoParams::default(),
            seed: 0,
            time_limit: Duration::from_secs(30),
            anytime: false,
            workers: LnsOptions::default().workers,
            lns_proposals: None,
            jobs: 1,
            solution: None,
            heatmap: None,
            trace: None,
            verbose: false,
        }
    }
}

impl RunConfig {
    pub fn solver_options(&self, mode: GuidanceMode) -> SolverOptions {
        SolverOptions {
            mode,
            guidance: GuidanceParams {
                window: self.window,
                alpha: self.alpha,
                iterations: self.iterations,
                root_iterations: self.root_iterations,
                use_global: mode == GuidanceMode::Both,
                goal_wait: self.goal_wait,
            },
            suo: self.suo,
            seed: self.seed,
            guidance_interval: self.guidance_interval,
            ..SolverOptions::default()
        }
    }

    fn check(&self) -> Result<(), BenchError> {
        let fail = |m: &str| Err(BenchError::Config(m.to_owned()));
        if self.scens.is_empty() {
            return fail("no scenario files given");
        }
        if self.agents.is_empty() || self.agents.contains(&0) {
            return fail("agent counts must be positive");
        }
        if self.modes.is_empty() {
            return fail("no guidance mode given");
        }
        if self.time_limit.is_zero() {
            return fail("time limit must be positive");
        }
        if self.jobs == 0 || self.workers == 0 {
            return fail("jobs and workers must be positive");
        }
        if self.guidance_interval == 0 {
            return fail("guidance interval must be positive");
        }
        let any_local = self.modes.iter().any(|m| m.uses_local());
        if let Err(e) = self.solver_options(GuidanceMode::Local).guidance.validate() {
            if any_local {
                return Err(BenchError::Config(e.to_string()));
            }
        }
        if self.suo.passes == 0 && self.modes.iter().any(|m| m.uses_global()) {
            return fail("global guidance needs at least one pass");
        }
        Ok(())
    }
}

/// Map and scenario files read into memory.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub map_name: String,
    pub grid: Arc<Grid>,
    /// `(scenario index, records)` per scenario file.
    pub scens: Vec<(usize, Vec<ScenarioRecord>)>,
}

/// Scenario index: the trailing number of the file stem when there is one
/// (`maze-128-128-10-random-7.scen` is 7), else the 1-based position.
fn scen_index(path: &Path, position: usize) -> usize {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    stem.rsplit(['-', '_'])
        .next()
        .and_then(|t| t.parse().ok())
        .unwrap_or(position + 1)
}

impl Loaded {
    pub fn read(map: &Path, scens: &[PathBuf]) -> Result<Self, BenchError> {
        let grid = Grid::parse_map(&read_file(map)?).map_err(|source| BenchError::Map {
            path: map.to_owned(),
            source,
        })?;
        let map_name = map
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("map")
            .to_owned();
        let mut parsed = Vec::with_capacity(scens.len());
        for (k, path) in scens.iter().enumerate() {
            let records = parse_scenario_records(&read_file(path)?).map_err(|source| {
                BenchError::Scenario {
                    path: path.clone(),
                    source,
                }
            })?;
            parsed.push((scen_index(path, k), records));
        }
        Ok(Self {
            map_name,
            grid: Arc::new(grid),
            scens: parsed,
        })
    }

    /// Instance from the first `n` records of scenario `k` (position in
    /// [`Loaded::scens`]).
    pub fn instance(&self, k: usize, n: usize, scen_path: &Path) -> Result<Instance, BenchError> {
        Instance::from_records(self.grid.clone(), &self.scens[k].1, n).map_err(|source| {
            BenchError::Scenario {
                path: scen_path.to_owned(),
                source,
            }
        })
    }
}

/// One result line. Unsolved runs leave the quality columns empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub map: String,
    pub scen: usize,
    pub n: usize,
    pub mode: String,
    pub w: usize,
    pub alpha: f64,
    pub seed: u64,
    pub solved: bool,
    pub flowtime: Option<u64>,
    pub lb: u64,
    pub ratio: Option<f64>,
    pub runtime_ms: u64,
    pub status: String,
    /// Flowtime before LNS; empty unless running anytime.
    pub initial_flowtime: Option<u64>,
}

pub const CSV_HEADER: &str =
    "map,scen,n,mode,w,alpha,seed,solved,flowtime,lb,ratio,runtime_ms,status,initial_flowtime";

#[derive(Debug, Clone, Default)]
pub struct RunOutputs {
    pub rows: Vec<Row>,
    /// Files written besides the CSV.
    pub files: Vec<PathBuf>,
}

struct Job {
    scen_pos: usize,
    n: usize,
    mode: GuidanceMode,
}

/// `stem-suffix.ext` next to `base`; `base` itself when `single`.
pub(crate) fn derived_path(base: &Path, suffix: &str, single: bool) -> PathBuf {
    if single {
        return base.to_owned();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{suffix}.{ext}"),
        None => format!("{stem}-{suffix}"),
    };
    base.with_file_name(name)
}

fn run_one(
    cfg: &RunConfig,
    loaded: &Loaded,
    instance: &Instance,
    job: &Job,
    single: bool,
) -> Result<(Row, Vec<PathBuf>), BenchError> {
    let scen = loaded.scens[job.scen_pos].0;
    let mut row = Row {
        map: loaded.map_name.clone(),
        scen,
        n: job.n,
        mode: job.mode.to_string(),
        w: cfg.window,
        alpha: cfg.alpha,
        seed: cfg.seed,
        solved: false,
        flowtime: None,
        lb: instance.lower_bound(),
        ratio: None,
        runtime_ms: 0,
        status: String::new(),
        initial_flowtime: None,
    };
    let mut files = Vec::new();

    let started = Instant::now();
    let deadline = Deadline::at(started + cfg.time_limit);
    let result = Solver::new(instance, cfg.solver_options(job.mode))
        .map_err(|e| BenchError::Config(e.to_string()))?
        .solve(deadline);
    let (solution, trace) = match result {
        Ok(initial) if cfg.anytime => {
            row.initial_flowtime = Some(initial.flowtime());
            let lns = LnsOptions {
                workers: cfg.workers,
                seed: cfg.seed,
                max_proposals: cfg.lns_proposals,
                ..LnsOptions::default()
            };
            let out = refine(instance, &initial, deadline, &lns);
            (Ok(out.solution), Some(out.trace))
        }
        Ok(s) => (Ok(s), None),
        Err(e) => (Err(e), None),
    };
    let runtime = started.elapsed();
    row.runtime_ms = runtime.as_millis() as u64;

    let suffix = format!("{}-{}-{}-{}", loaded.map_name, scen, job.n, job.mode);
    match solution {
        Ok(sol) => match validate(instance, &sol) {
            Ok(()) => {
                let m = compute_metrics(instance, &sol, runtime);
                row.solved = true;
                row.flowtime = Some(m.flowtime);
                row.ratio = Some(m.ratio);
                row.status = "ok".into();
                if let Some(base) = &cfg.solution {
                    let path = derived_path(base, &suffix, single);
                    let file =
                        output::SolutionFile::new(&loaded.map_name, cfg.seed, instance, &sol);
                    output::write_solution(&path, &file)?;
                    files.push(path);
                }
                if let Some(prefix) = &cfg.heatmap {
                    files.extend(output::write_heatmap(
                        prefix,
                        &suffix,
                        instance.grid(),
                        &m.visits,
                    )?);
                }
                if let (Some(prefix), Some(trace)) = (&cfg.trace, trace) {
                    let path = output::prefixed(prefix, &suffix, "csv");
                    write_file(&path, trace_csv(&trace, true).as_bytes())?;
                    files.push(path);
                }
            }
            Err(v) => row.status = format!("invalid: {v}"),
        },
        Err(e) => {
            row.status = match e {
                SolveError::Timeout => "timeout".into(),
                SolveError::NodeLimit => "node_limit".into(),
                SolveError::Unsolvable => "unsolvable".into(),
                other => other.to_string(),
            }
        }
    }
    if cfg.verbose {
        eprintln!(
            "{} scen={} n={} mode={} solved={} flowtime={} lb={} runtime_ms={}",
            row.map,
            row.scen,
            row.n,
            row.mode,
            row.solved,
            row.flowtime.map_or("-".into(), |f| f.to_string()),
            row.lb,
            row.runtime_ms
        );
    }
    Ok((row, files))
}

/// Runs every (scenario, agent count, mode) combination and returns the rows
/// in that nesting order. Per-instance failures become unsolved rows; only
/// configuration and file errors abort.
pub fn run_benchmark(cfg: &RunConfig) -> Result<RunOutputs, BenchError> {
    cfg.check()?;
    let loaded = Loaded::read(&cfg.map, &cfg.scens)?;
    for (k, (_, records)) in loaded.scens.iter().enumerate() {
        if let Some(&n) = cfg.agents.iter().find(|&&n| n > records.len()) {
            return Err(BenchError::Config(format!(
                "{}: {} agents requested but the scenario has {} records",
                cfg.scens[k].display(),
                n,
                records.len()
            )));
        }
    }

    // instances are shared by all modes of one (scenario, n) pair
    let mut instances = Vec::new();
    let mut jobs = Vec::new();
    for k in 0..loaded.scens.len() {
        for &n in &cfg.agents {
            instances.push(loaded.instance(k, n, &cfg.scens[k])?);
            for &mode in &cfg.modes {
                jobs.push((
                    instances.len() - 1,
                    Job {
                        scen_pos: k,
                        n,
                        mode,
                    },
                ));
            }
        }
    }
    let single = jobs.len() == 1;

    type Slot = Mutex<Option<Result<(Row, Vec<PathBuf>), BenchError>>>;
    let slots: Vec<Slot> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let j = next.fetch_add(1, Ordering::Relaxed);
        let Some((inst, job)) = jobs.get(j) else {
            break;
        };
        let r = run_one(cfg, &loaded, &instances[*inst], job, single);
        *slots[j].lock().unwrap() = Some(r);
    };
    if cfg.jobs == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..cfg.jobs.min(jobs.len()) {
                s.spawn(work);
            }
        });
    }

    let mut out = RunOutputs::default();
    for slot in slots {
        let (row, files) = slot.into_inner().unwrap().expect("every job ran")?;
        out.rows.push(row);
        out.files.extend(files);
    }
    Ok(out)
}

pub fn write_csv<W: Write>(rows: &[Row], writer: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
