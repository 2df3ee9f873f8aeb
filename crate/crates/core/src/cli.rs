//! Command-line front end: `plan`, `verify` and `bench`.
//!
//! Exit codes: 0 success, 2 infeasible, 3 audit failure, 64 usage or missing
//! file, 65 malformed or invalid input, 70 internal error, 74 other I/O.

use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::program::{plan, PlanError, PlanResult, Strategy};
use crate::scenario::{
    load_scenario_doc, read_result, write_result, Scenario, ScenarioDoc, ScenarioError,
};
use crate::verify::{audit, audit_plan, FeasibilityReport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_AUDIT: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_SOFTWARE: u8 = 70;
pub const EXIT_IO: u8 = 74;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GCSPLAN_OUT_DIR";

pub const DEFAULT_BENCH_RUNS: usize = 500;

/// Reference GCS solve times (mean, std in ms) for the shipped fixtures.
pub const REFERENCE_TIMES: [(&str, f64, f64); 3] = [
    ("static_avoidance", 12.1, 1.04),
    ("lane_change", 13.9, 2.43),
    ("overtaking", 12.4, 1.03),
];

#[derive(Debug, Parser)]
#[command(
    name = "gcs-planner",
    version,
    about = "Plan and audit vehicle trajectories over graphs of convex sets"
)]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan, audit and write artifacts for one scenario.
    Plan(RunConfig),
    /// Re-audit a stored result against its scenario.
    Verify(VerifyConfig),
    /// Time the planning phase on a set of scenarios.
    Bench(BenchConfig),
}

/// Scenario settings that can be overridden from the command line.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Bézier degree (4 to 10).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Facet count of the polyhedral norm.
    #[arg(long)]
    pub facets: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[arg(long)]
    pub alpha3: Option<f64>,
    #[arg(long)]
    pub alpha4: Option<f64>,
    #[arg(long)]
    pub v_min: Option<f64>,
    #[arg(long)]
    pub v_max: Option<f64>,
    #[arg(long)]
    pub h_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Audit sample step in seconds.
    #[arg(long)]
    pub audit_dt: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        let ints = [self.degree, self.facets, self.max_len];
        let floats = [
            self.alpha1,
            self.alpha2,
            self.alpha3,
            self.alpha4,
            self.v_min,
            self.v_max,
            self.h_min,
            self.t_max,
            self.audit_dt,
        ];
        ints.iter().all(Option::is_none) && floats.iter().all(Option::is_none)
    }

    pub fn apply(&self, doc: &mut ScenarioDoc) {
        fn set<T: Copy>(slot: &mut Option<T>, value: Option<T>) {
            if value.is_some() {
                *slot = value;
            }
        }
        set(&mut doc.planner.degree, self.degree);
        set(&mut doc.planner.facets, self.facets);
        set(&mut doc.planner.max_len, self.max_len);
        set(&mut doc.weights.alpha1, self.alpha1);
        set(&mut doc.weights.alpha2, self.alpha2);
        set(&mut doc.weights.alpha3, self.alpha3);
        set(&mut doc.weights.alpha4, self.alpha4);
        set(&mut doc.limits.v_min, self.v_min);
        set(&mut doc.limits.v_max, self.v_max);
        set(&mut doc.limits.h_min, self.h_min);
        set(&mut doc.limits.t_max, self.t_max);
        set(&mut doc.audit.dt, self.audit_dt);
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory for all artifacts.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    /// auto, enumerate, relax-round or both.
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Recorded for reproducibility; planning itself draws no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyConfig {
    /// A `result.json` written by `plan`.
    #[arg(long)]
    pub result: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Args)]
pub struct BenchConfig {
    /// Scenario files; defaults to the shipped fixtures.
    pub scenarios: Vec<PathBuf>,
    #[arg(short = 'n', long, default_value_t = DEFAULT_BENCH_RUNS)]
    pub runs: usize,
    /// Untimed runs per scenario before measuring.
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Seeds the order in which scenarios are interleaved each round.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("override rejected: {0}")]
    Override(ScenarioError),
    #[error(transparent)]
    Infeasible(PlanError),
    #[error("audit failed:\n  {}", .0.join("\n  "))]
    Audit(Vec<String>),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Override(_) => EXIT_USAGE,
            CliError::Scenario(ScenarioError::Io { source, .. })
                if source.kind() == ErrorKind::NotFound =>
            {
                EXIT_USAGE
            }
            CliError::Scenario(ScenarioError::Io { .. }) => EXIT_IO,
            CliError::Scenario(_) => EXIT_DATA,
            CliError::Infeasible(PlanError::NoFeasiblePath { .. }) => EXIT_INFEASIBLE,
            CliError::Infeasible(_) | CliError::Internal(_) => EXIT_SOFTWARE,
            CliError::Audit(_) => EXIT_AUDIT,
        }
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{what} file not found: {}\n\n{}",
            path.display(),
            usage_hint()
        )))
    }
}

fn usage_hint() -> &'static str {
    "usage: gcs-planner plan --scenario <FILE> [--out <DIR>]\n       gcs-planner verify --result <FILE> --scenario <FILE>\n       gcs-planner bench [FILES]..."
}

/// Load a scenario, validating the file as written before applying overrides.
pub fn load_with_overrides(path: &Path, overrides: &Overrides) -> Result<Scenario, CliError> {
    require_file(path, "scenario")?;
    let mut doc = load_scenario_doc(path)?;
    if overrides.is_empty() {
        return Ok(Scenario::from_doc(doc)?);
    }
    Scenario::from_doc(doc.clone())?;
    overrides.apply(&mut doc);
    Scenario::from_doc(doc).map_err(CliError::Override)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.6}"))
}

fn print_report(report: &FeasibilityReport) {
    match &report.min_distance {
        Some(d) => println!(
            "min distance   {:.4} m to {} at t = {:.2} s",
            d.distance, d.obstacle, d.t
        ),
        None => println!("min distance   - (no obstacles)"),
    }
    println!(
        "speed          {:.3} .. {:.3} m/s (bound {:.3})",
        report.speed_min.value, report.speed_max.value, report.speed_bound
    );
    println!(
        "max |a_T|      {:.3} m/s^2 at t = {:.2} s",
        report.max_abs_a_t.value, report.max_abs_a_t.t
    );
    println!(
        "max |a_N|      {:.3} m/s^2 at t = {:.2} s",
        report.max_abs_a_n.value, report.max_abs_a_n.t
    );
    if let Some(d) = &report.max_abs_delta {
        println!("max |delta|    {:.4} rad at t = {:.2} s", d.value, d.t);
    }
    for w in &report.windows {
        println!(
            "window         {}: entry {} exit {} {}",
            w.vertex,
            fmt_opt(w.entry),
            fmt_opt(w.exit),
            if w.satisfied { "ok" } else { "VIOLATED" }
        );
    }
    println!(
        "goal           speed {:.4} m/s (target {:.4})",
        report.goal.terminal_speed, report.goal.goal_speed
    );
    println!("junction jump  {:.3e}", report.max_junction_jump());
    match (&report.rollout, &report.rollout_error) {
        (Some(r), _) => println!(
            "rollout        max {:.4} m over {:.2} m ({:.3} %)",
            r.max_deviation,
            r.path_length,
            100.0 * r.relative_max()
        ),
        (None, Some(e)) => println!("rollout        unavailable: {e}"),
        _ => {}
    }
    for (t, v) in report.speed_violations.iter().take(20) {
        println!("speed violation t = {t:.3} s, {v:.4} m/s");
    }
    if report.speed_violations.len() > 20 {
        println!(
            "speed violation ... {} more",
            report.speed_violations.len() - 20
        );
    }
}

fn check_lower_bound(plan: &PlanResult) -> Result<(), CliError> {
    let Some(lb) = plan.lower_bound else {
        return Err(CliError::Internal(
            "strategy both produced no lower bound".into(),
        ));
    };
    let rounded = plan.rounded.as_ref().and_then(|r| r.objective);
    println!("lower bound    {lb:.9}");
    println!("relax-round    {}", fmt_opt(rounded));
    println!("enumerate      {:.9}", plan.objective);
    for obj in rounded.into_iter().chain([plan.objective]) {
        if lb > obj + 1e-6 * obj.abs().max(1.0) {
            return Err(CliError::Internal(format!(
                "lower bound {lb} exceeds objective {obj}"
            )));
        }
    }
    Ok(())
}

pub fn cmd_plan(cfg: &RunConfig) -> Result<(), CliError> {
    let mut scenario = load_with_overrides(&cfg.scenario, &cfg.overrides)?;
    if let Some(s) = cfg.strategy {
        scenario.problem.settings.strategy = s;
    }
    for line in &scenario.provenance {
        log::info!("{line}");
    }
    log::debug!("seed {}", cfg.seed);

    let result = plan(&scenario.problem).map_err(|e| {
        if let PlanError::NoFeasiblePath { outcomes } = &e {
            for o in outcomes {
                eprintln!(
                    "  {}: {}",
                    o.path.join(" -> "),
                    o.error.as_deref().unwrap_or("?")
                );
                for (family, r) in &o.diagnostics {
                    eprintln!("      {family:?} residual {r:.3e}");
                }
            }
        }
        CliError::Infeasible(e)
    })?;
    println!("scenario       {}", scenario.name);
    println!("strategy       {:?}", result.strategy);
    println!("path           {}", result.path.join(" -> "));
    println!("objective      {:.9}", result.objective);
    if result.strategy == Strategy::Both {
        check_lower_bound(&result)?;
    } else if let Some(lb) = result.lower_bound {
        println!("lower bound    {lb:.9}");
    }

    let report = audit_plan(&result, &scenario, scenario.audit.dt)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    print_report(&report);
    let t = &result.timings;
    println!(
        "time (ms)      plan {:.2} = enumeration {:.2} + assembly {:.2} + solve {:.2} + relaxation {:.2} + rounding {:.2}; audit {:.2}",
        t.plan_ms, t.enumeration_ms, t.assembly_ms, t.solve_ms, t.relaxation_ms, t.rounding_ms, report.elapsed_ms
    );
    let files = write_result(&result, &report, &scenario, &cfg.out)?;
    println!(
        "wrote          {}",
        files.result.parent().unwrap_or(Path::new(".")).display()
    );

    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Audit(failures))
    }
}

pub fn cmd_verify(cfg: &VerifyConfig) -> Result<(), CliError> {
    let scenario = load_with_overrides(&cfg.scenario, &cfg.overrides)?;
    require_file(&cfg.result, "result")?;
    let result = read_result(&cfg.result)?;
    if result.scenario != scenario.name {
        log::warn!(
            "result was planned for {:?}, verifying against {:?}",
            result.scenario,
            scenario.name
        );
    }
    let report = audit(&result.path, &result.segments, &scenario, scenario.audit.dt)
        .map_err(|e| CliError::Audit(vec![e.to_string()]))?;
    println!("scenario       {}", scenario.name);
    println!("path           {}", result.path.join(" -> "));
    print_report(&report);
    let failures = report.failures();
    if failures.is_empty() {
        println!("audit          passed");
        Ok(())
    } else {
        Err(CliError::Audit(failures))
    }
}

/// Mean and unbiased standard deviation; the deviation of fewer than two
/// samples is zero.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub scenario: String,
    pub runs: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    /// Mean of the planner's own `plan_ms` bookkeeping.
    pub phase_mean_ms: f64,
    pub reference: Option<(f64, f64)>,
}

pub fn default_fixtures() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    ["static_avoidance", "lane_change", "overtaking"]
        .iter()
        .map(|n| dir.join(format!("{n}.json")))
        .collect()
}

/// Time `plan` alone. Parsing happens once up front and nothing is written
/// inside the timed loop.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, CliError> {
    if cfg.runs == 0 {
        return Err(CliError::Usage("bench needs at least one run".into()));
    }
    let paths = if cfg.scenarios.is_empty() {
        default_fixtures()
    } else {
        cfg.scenarios.clone()
    };
    let mut scenarios = Vec::new();
    for p in &paths {
        let mut s = load_with_overrides(p, &Overrides::default())?;
        if let Some(st) = cfg.strategy {
            s.problem.settings.strategy = st;
        }
        for _ in 0..cfg.warmup {
            plan(&s.problem).map_err(CliError::Infeasible)?;
        }
        scenarios.push(s);
    }

    let mut wall = vec![Vec::with_capacity(cfg.runs); scenarios.len()];
    let mut phase = vec![Vec::with_capacity(cfg.runs); scenarios.len()];
    let mut order: Vec<usize> = (0..scenarios.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.runs {
        order.shuffle(&mut rng);
        for &i in &order {
            let t = Instant::now();
            let r = plan(&scenarios[i].problem).map_err(CliError::Infeasible)?;
            let elapsed = t.elapsed().as_secs_f64() * 1e3;
            if r.timings.plan_ms > elapsed {
                return Err(CliError::Internal(
                    "phase bookkeeping exceeds measured wall time".into(),
                ));
            }
            wall[i].push(elapsed);
            phase[i].push(r.timings.plan_ms);
        }
    }

    Ok(scenarios
        .iter()
        .zip(wall.iter().zip(&phase))
        .map(|(s, (w, p))| {
            let (mean_ms, std_ms) = mean_std(w);
            BenchRow {
                scenario: s.name.clone(),
                runs: w.len(),
                mean_ms,
                std_ms,
                phase_mean_ms: mean_std(p).0,
                reference: REFERENCE_TIMES
                    .iter()
                    .find(|r| r.0 == s.name)
                    .map(|r| (r.1, r.2)),
            }
        })
        .collect())
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<20} | {:>6} | {:>22} | {:>22}\n",
        "Scenario", "runs", "GCS (this build)", "GCS (reference)"
    );
    out.push_str(&format!(
        "{:-<20}-+-{:->6}-+-{:->22}-+-{:->22}\n",
        "", "", "", ""
    ));
    for r in rows {
        let this = format!("{:.2}ms ± {:.2}ms", r.mean_ms, r.std_ms);
        let reference = r
            .reference
            .map_or("-".into(), |(m, s)| format!("{m:.1}ms ± {s:.2}ms"));
        out.push_str(&format!(
            "{:<20} | {:>6} | {:>22} | {:>22}\n",
            r.scenario, r.runs, this, reference
        ));
    }
    out
}

pub fn cmd_bench(cfg: &BenchConfig) -> Result<(), CliError> {
    let rows = run_bench(cfg)?;
    print!("{}", bench_table(&rows));
    println!("reference times come from different hardware and are shown for context only");
    std::fs::create_dir_all(&cfg.out).map_err(|e| ScenarioError::Io {
        path: cfg.out.clone(),
        source: e,
    })?;
    let path = cfg.out.join("bench.csv");
    let mut csv = String::from("scenario,runs,mean_ms,std_ms,phase_mean_ms\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scenario, r.runs, r.mean_ms, r.std_ms, r.phase_mean_ms
        ));
    }
    std::fs::write(&path, csv).map_err(|e| ScenarioError::Io { path, source: e })?;
    Ok(())
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    let outcome = match &cli.command {
        Command::Plan(cfg) => cmd_plan(cfg),
        Command::Verify(cfg) => cmd_verify(cfg),
        Command::Bench(cfg) => cmd_bench(cfg),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
