//! Command-line front end for the rskit library.
//!
//! One binary, seven subcommands: point solves (`solve-erm`, `solve-rs`,
//! `solve-dro`), decision diagnostics (`fragility`, `interval`), transport
//! distances (`wasserstein`), and Monte Carlo sweeps (`experiment`). Results
//! go to stdout or `--out` as JSON or CSV.
//!
//! Option precedence everywhere is flag > config file > built-in default;
//! the seed additionally falls back to the `RSKIT_SEED` environment variable
//! between the config file and the default of 0.
//!
//! Exit codes: 0 on success, 1 on validation or input errors, 2 when a
//! solver stops without meeting its tolerances.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use rskit::distributions::{read_dataset, read_distribution, Dataset, SyntheticConfig};
use rskit::experiments::{run_scenario, ExperimentConfig, Scenario, SweepResult};
use rskit::inference::{
    confidence_interval, remainder, shifted_interval, BetaSchedule, ConfidenceInterval,
    IntervalVariant, Remainder, RemainderSchedule,
};
use rskit::robust::fragility_closed_form;
use rskit::solvers::{
    solve_dro, solve_erm, solve_rs, empirical_loss, Diagnostics, NormVariant, SolverOptions,
};
use rskit::transport::{wasserstein, GroundCost};
use rskit::{ExtReal, Loss, Result, RsError, Task};

// ============================================================================
// Argument surface
// ============================================================================

#[derive(Parser)]
#[command(
    name = "rskit",
    version,
    about = "Robust satisficing toolkit: solvers, diagnostics, and experiment sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    globals: Globals,
}

#[derive(Args)]
struct Globals {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// RNG seed (falls back to config, then RSKIT_SEED, then 0)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write results to this file instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output format (default: json, except csv for experiment sweeps)
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Training dataset CSV with header u1,...,um,y
    #[arg(long, global = true, value_name = "PATH")]
    data: Option<PathBuf>,

    /// Worker threads for experiment sweeps (default: logical cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the empirical loss
    SolveErm(SolveErmArgs),
    /// Solve the satisficing program at a relative target level
    SolveRs(SolveRsArgs),
    /// Solve the worst-case problem over a transport ball
    SolveDro(SolveDroArgs),
    /// Certify the fragility of a fixed decision against a target level
    Fragility(FragilityArgs),
    /// Solve at a target level and wrap the out-of-sample loss in intervals
    Interval(IntervalArgs),
    /// Optimal-transport distance between two discrete distributions
    Wasserstein(WassersteinArgs),
    /// Run a Monte Carlo sweep and report per-cell summaries
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SolveErmArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct SolveRsArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Relative slack over the empirical minimum: target = (1 + epsilon) * min
    #[arg(long)]
    epsilon: f64,

    /// Decision size measure tied to the transport cost
    #[arg(long, value_enum, default_value_t = NormName::XOnly)]
    norm: NormName,
}

#[derive(Args)]
struct SolveDroArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Transport ball radius
    #[arg(long)]
    radius: f64,

    /// Decision size measure tied to the transport cost
    #[arg(long, value_enum, default_value_t = NormName::XOnly)]
    norm: NormName,
}

#[derive(Args)]
struct FragilityArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Decision vector, comma separated (one entry per feature)
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    x: Vec<f64>,

    /// Target level the decision must hold on the empirical distribution
    #[arg(long)]
    tau: f64,

    /// Ground cost of the transport balls the certificate guards against
    #[arg(long, value_enum, default_value_t = CostName::FeatureOnly)]
    cost: CostName,
}

#[derive(Args)]
struct IntervalArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Relative slack over the empirical minimum: target = (1 + epsilon) * min
    #[arg(long)]
    epsilon: f64,

    /// Decision size measure tied to the transport cost
    #[arg(long, value_enum, default_value_t = NormName::XOnly)]
    norm: NormName,

    /// Constant tail level beta_N = beta
    #[arg(long)]
    beta: Option<f64>,

    /// Exponential tail level beta_N = c1 * exp(-gamma * sqrt(N))
    #[arg(long)]
    gamma: Option<f64>,

    /// Polynomial tail level beta_N = N^(-alpha)
    #[arg(long)]
    alpha: Option<f64>,

    /// Concentration prefactor (>= 1)
    #[arg(long)]
    c1: Option<f64>,

    /// Concentration rate (> 0)
    #[arg(long)]
    c2: Option<f64>,

    /// Tail exponent for radii above one (> 1)
    #[arg(long)]
    a: Option<f64>,

    /// Joint dimension of one observation (features plus label)
    #[arg(long)]
    m: Option<usize>,

    /// Sample size the remainder is evaluated at (default: dataset size)
    #[arg(long)]
    n: Option<usize>,

    /// Directly supplied remainder radius; replaces the schedule flags
    #[arg(long)]
    r: Option<f64>,

    /// Confidence level attached to a directly supplied radius
    #[arg(long)]
    level: Option<f64>,

    /// Lipschitz bound for the wide interval arm (default: the certificate)
    #[arg(long)]
    lipschitz_bound: Option<f64>,

    /// Distribution shift distance; adds the shifted interval to the report
    #[arg(long)]
    d_shift: Option<f64>,

    /// Minimal attainable loss under the shifted distribution, if known
    #[arg(long)]
    j_shifted: Option<f64>,
}

#[derive(Args)]
struct WassersteinArgs {
    /// First distribution CSV with header x1,...,xd[,w]
    #[arg(long, value_name = "PATH")]
    p: PathBuf,

    /// Second distribution CSV with header x1,...,xd[,w]
    #[arg(long, value_name = "PATH")]
    q: PathBuf,

    /// Ground cost between atoms
    #[arg(long, value_enum, default_value_t = CostName::FullL2)]
    cost: CostName,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Which sweep to run
    #[arg(value_enum)]
    scenario: ScenarioName,

    /// Monte Carlo replications per grid cell
    #[arg(long)]
    replications: Option<usize>,
}

/// Loss, parameter, and task flags shared by the solve-style subcommands.
#[derive(Args)]
struct ModelArgs {
    /// Loss function
    #[arg(long, value_enum, default_value_t = LossName::L1)]
    loss: LossName,

    /// Width or quantile parameter (huber, insensitive, pinball)
    #[arg(long)]
    delta: Option<f64>,

    /// Domain radius bound for the squared loss
    #[arg(long)]
    bound: Option<f64>,

    /// Prediction task the labels encode
    #[arg(long, value_enum, default_value_t = TaskName::Regression)]
    task: TaskName,
}

impl ModelArgs {
    fn build(&self) -> Result<(Loss, Task)> {
        let needs_delta = matches!(
            self.loss,
            LossName::Huber | LossName::Insensitive | LossName::Pinball
        );
        if self.delta.is_some() && !needs_delta {
            return Err(RsError::InvalidParameter(format!(
                "--delta does not apply to the {} loss",
                self.loss.text()
            )));
        }
        if self.bound.is_some() && self.loss != LossName::Squared {
            return Err(RsError::InvalidParameter(
                "--bound only applies to the squared loss".to_string(),
            ));
        }
        let delta = || {
            self.delta.ok_or_else(|| {
                RsError::InvalidParameter(format!("the {} loss needs --delta", self.loss.text()))
            })
        };
        let loss = match self.loss {
            LossName::Hinge => Loss::Hinge,
            LossName::SmoothHinge => Loss::SmoothHinge,
            LossName::Logistic => Loss::Logistic,
            LossName::L1 => Loss::L1,
            LossName::Squared => Loss::Squared { bound: self.bound },
            LossName::Huber => Loss::Huber { delta: delta()? },
            LossName::Insensitive => Loss::Insensitive { delta: delta()? },
            LossName::Pinball => Loss::Pinball { delta: delta()? },
        };
        Ok((loss, self.task.into()))
    }
}

// Value enums mirror the serde spellings of the domain types so that flags,
// config files, and JSON output all use the same names.

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LossName {
    #[value(name = "hinge")]
    Hinge,
    #[value(name = "smooth_hinge")]
    SmoothHinge,
    #[value(name = "logistic")]
    Logistic,
    #[value(name = "l1")]
    L1,
    #[value(name = "squared")]
    Squared,
    #[value(name = "huber")]
    Huber,
    #[value(name = "insensitive")]
    Insensitive,
    #[value(name = "pinball")]
    Pinball,
}

impl LossName {
    fn text(self) -> &'static str {
        match self {
            LossName::Hinge => "hinge",
            LossName::SmoothHinge => "smooth_hinge",
            LossName::Logistic => "logistic",
            LossName::L1 => "l1",
            LossName::Squared => "squared",
            LossName::Huber => "huber",
            LossName::Insensitive => "insensitive",
            LossName::Pinball => "pinball",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TaskName {
    #[value(name = "regression")]
    Regression,
    #[value(name = "classification")]
    Classification,
}

impl From<TaskName> for Task {
    fn from(name: TaskName) -> Task {
        match name {
            TaskName::Regression => Task::Regression,
            TaskName::Classification => Task::Classification,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NormName {
    #[value(name = "x_only")]
    XOnly,
    #[value(name = "augmented")]
    Augmented,
}

impl From<NormName> for NormVariant {
    fn from(name: NormName) -> NormVariant {
        match name {
            NormName::XOnly => NormVariant::XOnly,
            NormName::Augmented => NormVariant::Augmented,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CostName {
    #[value(name = "full_l2")]
    FullL2,
    #[value(name = "feature_only")]
    FeatureOnly,
}

impl From<CostName> for GroundCost {
    fn from(name: CostName) -> GroundCost {
        match name {
            CostName::FullL2 => GroundCost::FullL2,
            CostName::FeatureOnly => GroundCost::FeatureOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScenarioName {
    #[value(name = "sample_size")]
    SampleSize,
    #[value(name = "shift")]
    Shift,
    #[value(name = "correspondence")]
    Correspondence,
    #[value(name = "sensitivity_dro")]
    SensitivityDro,
    #[value(name = "sensitivity_rs")]
    SensitivityRs,
    #[value(name = "coverage")]
    Coverage,
}

impl From<ScenarioName> for Scenario {
    fn from(name: ScenarioName) -> Scenario {
        match name {
            ScenarioName::SampleSize => Scenario::SampleSize,
            ScenarioName::Shift => Scenario::Shift,
            ScenarioName::Correspondence => Scenario::Correspondence,
            ScenarioName::SensitivityDro => Scenario::SensitivityDro,
            ScenarioName::SensitivityRs => Scenario::SensitivityRs,
            ScenarioName::Coverage => Scenario::Coverage,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OutputFormat {
    #[value(name = "csv")]
    Csv,
    #[value(name = "json")]
    Json,
}

// ============================================================================
// Config file
// ============================================================================

/// Top-level TOML config. Every key is optional; unknown keys are rejected
/// with the parser's line and field diagnostic.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    jobs: Option<usize>,
    /// Solver controls for the solve-style subcommands; also overrides the
    /// solver embedded in `[experiment]` when both are present.
    solver: Option<SolverOptions>,
    /// Data-generating process; overrides the one embedded in `[experiment]`.
    synthetic: Option<SyntheticConfig>,
    experiment: Option<ExperimentConfig>,
    schedule: Option<RemainderSchedule>,
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        RsError::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    toml::from_str(&text).map_err(|e| {
        RsError::Validation(format!("malformed config {}: {e}", path.display()))
    })
}

/// Global options after merging flags, config, and environment.
struct Resolved {
    /// Seed from an explicit source (flag, config, or RSKIT_SEED), if any.
    seed_explicit: Option<u64>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    format: OutputFormat,
    jobs: Option<usize>,
    solver: SolverOptions,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("RSKIT_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| {
                RsError::Validation(format!(
                    "RSKIT_SEED must be a nonnegative integer, got {text:?}"
                ))
            }),
        Err(_) => Ok(None),
    }
}

fn resolve(globals: &Globals, config: &RunConfig, default_format: OutputFormat) -> Result<Resolved> {
    let seed_explicit = match globals.seed.or(config.seed) {
        Some(s) => Some(s),
        None => env_seed()?,
    };
    Ok(Resolved {
        seed_explicit,
        data: globals.data.clone().or_else(|| config.data.clone()),
        out: globals.out.clone().or_else(|| config.out.clone()),
        format: globals.format.or(config.format).unwrap_or(default_format),
        jobs: globals.jobs.or(config.jobs),
        solver: config.solver.unwrap_or_default(),
    })
}

fn load_data(resolved: &Resolved) -> Result<Dataset> {
    let path = resolved.data.as_ref().ok_or_else(|| {
        RsError::Validation(
            "no dataset provided: pass --data or set `data` in the config".to_string(),
        )
    })?;
    read_dataset(path)
}

// ============================================================================
// Output
// ============================================================================

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| RsError::Validation(format!("cannot serialize result: {e}")))
}

/// Sweep rows in the fixed schema; an empty sweep is just the header.
fn sweep_to_csv(sweep: &SweepResult) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("grid_value,method,metric_mean,metric_se,replications,failures\n");
    for row in &sweep.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.grid_value, row.method, row.metric_mean, row.metric_se, row.replications,
            row.failures
        );
    }
    out
}

/// Two-column field,value listing of any report. Nested fields are dotted,
/// vectors are joined with semicolons inside one cell.
fn report_to_csv<T: Serialize>(value: &T) -> Result<String> {
    let tree = serde_json::to_value(value)
        .map_err(|e| RsError::Validation(format!("cannot serialize result: {e}")))?;
    let mut out = String::from("field,value\n");
    flatten_into("", &tree, &mut out);
    Ok(out)
}

fn flatten_into(prefix: &str, value: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            for (key, sub) in map {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten_into(&path, sub, out);
            }
        }
        Value::Array(items) => {
            let cells: Vec<String> = items.iter().map(scalar_text).collect();
            out.push_str(&format!("{prefix},{}\n", cells.join(";")));
        }
        other => out.push_str(&format!("{prefix},{}\n", scalar_text(other))),
    }
}

fn scalar_text(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            RsError::Validation(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Serialize a report in the resolved format and write it out.
fn emit_report<T: Serialize>(value: &T, resolved: &Resolved) -> Result<()> {
    let text = match resolved.format {
        OutputFormat::Json => to_json(value)?,
        OutputFormat::Csv => report_to_csv(value)?,
    };
    emit(&text, resolved.out.as_deref())
}

/// Exit code carrying the convergence status of a solve.
fn exit_for(diag: &Diagnostics) -> ExitCode {
    if diag.converged {
        ExitCode::SUCCESS
    } else {
        eprintln!("warning: solver stopped before meeting its tolerances");
        ExitCode::from(2)
    }
}

// ============================================================================
// Subcommand handlers
// ============================================================================

#[derive(Serialize)]
struct FragilityReport {
    fragility: ExtReal,
    empirical_loss: f64,
    tau: f64,
}

#[derive(Serialize)]
struct WassersteinReport {
    distance: ExtReal,
    cost: GroundCost,
}

#[derive(Serialize)]
struct IntervalReport {
    remainder: Remainder,
    /// Lipschitz bound used for the wide arm; defaults to the certificate.
    lipschitz_bound: f64,
    fragility_upper: ConfidenceInterval,
    lipschitz_upper: ConfidenceInterval,
    #[serde(skip_serializing_if = "Option::is_none")]
    shifted: Option<ConfidenceInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shifted_regret_bound: Option<f64>,
    solution: rskit::solvers::RsSolution,
}

fn handle_solve_erm(args: &SolveErmArgs, resolved: &Resolved) -> Result<ExitCode> {
    let data = load_data(resolved)?;
    let (loss, task) = args.model.build()?;
    let sol = solve_erm(&loss, task, &data, &resolved.solver)?;
    emit_report(&sol, resolved)?;
    Ok(exit_for(&sol.diagnostics))
}

fn handle_solve_rs(args: &SolveRsArgs, resolved: &Resolved) -> Result<ExitCode> {
    let data = load_data(resolved)?;
    let (loss, task) = args.model.build()?;
    let sol = solve_rs(&loss, task, &data, args.epsilon, args.norm.into(), &resolved.solver)?;
    emit_report(&sol, resolved)?;
    Ok(exit_for(&sol.diagnostics))
}

fn handle_solve_dro(args: &SolveDroArgs, resolved: &Resolved) -> Result<ExitCode> {
    let data = load_data(resolved)?;
    let (loss, task) = args.model.build()?;
    let sol = solve_dro(&loss, task, &data, args.radius, args.norm.into(), &resolved.solver)?;
    emit_report(&sol, resolved)?;
    Ok(exit_for(&sol.diagnostics))
}

fn handle_fragility(args: &FragilityArgs, resolved: &Resolved) -> Result<ExitCode> {
    let data = load_data(resolved)?;
    let (loss, task) = args.model.build()?;
    let report = FragilityReport {
        fragility: fragility_closed_form(&loss, task, args.cost.into(), &data, &args.x, args.tau)?,
        empirical_loss: empirical_loss(&loss, task, &data, &args.x)?,
        tau: args.tau,
    };
    emit_report(&report, resolved)?;
    Ok(ExitCode::SUCCESS)
}

fn handle_wasserstein(args: &WassersteinArgs, resolved: &Resolved) -> Result<ExitCode> {
    let p = read_distribution(&args.p)?;
    let q = read_distribution(&args.q)?;
    let (distance, _plan) = wasserstein(&p, &q, args.cost.into())?;
    let report = WassersteinReport {
        distance,
        cost: args.cost.into(),
    };
    emit_report(&report, resolved)?;
    Ok(ExitCode::SUCCESS)
}

/// Build the remainder for `interval` from a direct radius or schedule
/// parameters, with flags taking precedence over the `[schedule]` section.
fn resolve_remainder(
    args: &IntervalArgs,
    config: Option<&RemainderSchedule>,
    data: &Dataset,
) -> Result<Remainder> {
    let schedule_flags = args.beta.is_some()
        || args.gamma.is_some()
        || args.alpha.is_some()
        || args.c1.is_some()
        || args.c2.is_some()
        || args.a.is_some()
        || args.m.is_some()
        || args.n.is_some();

    if let Some(r_n) = args.r {
        if schedule_flags {
            return Err(RsError::Inconsistent(
                "pass either --r or schedule parameters, not both".to_string(),
            ));
        }
        return Remainder::with_level(r_n, args.level.unwrap_or(0.95));
    }
    if args.level.is_some() {
        return Err(RsError::Inconsistent(
            "--level only applies to a directly supplied --r".to_string(),
        ));
    }

    let kind_flags =
        args.beta.is_some() as usize + args.gamma.is_some() as usize + args.alpha.is_some() as usize;
    if kind_flags > 1 {
        return Err(RsError::Inconsistent(
            "choose one tail schedule: --beta, --gamma, or --alpha".to_string(),
        ));
    }
    let beta_kind = if let Some(beta) = args.beta {
        BetaSchedule::Constant { beta }
    } else if let Some(gamma) = args.gamma {
        BetaSchedule::ExpSqrt { gamma }
    } else if let Some(alpha) = args.alpha {
        BetaSchedule::Polynomial { alpha }
    } else if let Some(base) = config {
        base.beta_kind
    } else {
        BetaSchedule::Constant { beta: 0.05 }
    };

    if args.c1.is_none() && args.c2.is_none() && config.is_none() {
        eprintln!(
            "warning: tail constants default to placeholders (c1=2, c2=1, a=3); \
             the reported level is qualitative, not a guarantee"
        );
    }
    let schedule = RemainderSchedule {
        beta_kind,
        c1: args.c1.or(config.map(|c| c.c1)).unwrap_or(2.0),
        c2: args.c2.or(config.map(|c| c.c2)).unwrap_or(1.0),
        a: args.a.or(config.map(|c| c.a)).unwrap_or(3.0),
        m: args.m.or(config.map(|c| c.m)).unwrap_or(data.dim() + 1),
    };
    let n = args.n.unwrap_or_else(|| data.len());
    remainder(&schedule, n)
}

fn handle_interval(
    args: &IntervalArgs,
    resolved: &Resolved,
    config: &RunConfig,
) -> Result<ExitCode> {
    let data = load_data(resolved)?;
    let (loss, task) = args.model.build()?;
    let sol = solve_rs(&loss, task, &data, args.epsilon, args.norm.into(), &resolved.solver)?;
    let l_h = args.lipschitz_bound.unwrap_or(sol.k_tau);
    let rem = resolve_remainder(args, config.schedule.as_ref(), &data)?;

    let fragility_upper = confidence_interval(&sol, l_h, &rem, IntervalVariant::FragilityUpper)?;
    let lipschitz_upper = confidence_interval(&sol, l_h, &rem, IntervalVariant::LipschitzUpper)?;
    let (shifted, shifted_regret_bound) = match args.d_shift {
        Some(d_shift) => {
            let (ci, regret) = shifted_interval(&sol, l_h, &rem, d_shift, args.j_shifted)?;
            (Some(ci), regret)
        }
        None => (None, None),
    };

    let report = IntervalReport {
        remainder: rem,
        lipschitz_bound: l_h,
        fragility_upper,
        lipschitz_upper,
        shifted,
        shifted_regret_bound,
        solution: sol,
    };
    emit_report(&report, resolved)?;
    Ok(exit_for(&report.solution.diagnostics))
}

fn handle_experiment(
    args: &ExperimentArgs,
    resolved: &Resolved,
    config: &RunConfig,
) -> Result<ExitCode> {
    let scenario: Scenario = args.scenario.into();
    let mut ecfg = config
        .experiment
        .clone()
        .unwrap_or_else(|| ExperimentConfig::for_scenario(scenario));
    ecfg.scenario = scenario;
    if let Some(solver) = config.solver {
        ecfg.solver = solver;
    }
    if let Some(synthetic) = config.synthetic.clone() {
        ecfg.synthetic = synthetic;
    }
    if let Some(seed) = resolved.seed_explicit {
        ecfg.seed = seed;
    }
    if let Some(replications) = args.replications {
        ecfg.replications = replications;
    }
    if let Some(jobs) = resolved.jobs {
        if jobs == 0 {
            return Err(RsError::InvalidParameter("--jobs must be at least 1".to_string()));
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    let sweep = run_scenario(&ecfg)?;
    let text = match resolved.format {
        OutputFormat::Csv => sweep_to_csv(&sweep),
        OutputFormat::Json => to_json(&sweep)?,
    };
    emit(&text, resolved.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

// ============================================================================
// Entry point
// ============================================================================

fn run(cli: &Cli) -> Result<ExitCode> {
    let config = match &cli.globals.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let default_format = match &cli.command {
        Command::Experiment(_) => OutputFormat::Csv,
        _ => OutputFormat::Json,
    };
    let resolved = resolve(&cli.globals, &config, default_format)?;

    match &cli.command {
        Command::SolveErm(args) => handle_solve_erm(args, &resolved),
        Command::SolveRs(args) => handle_solve_rs(args, &resolved),
        Command::SolveDro(args) => handle_solve_dro(args, &resolved),
        Command::Fragility(args) => handle_fragility(args, &resolved),
        Command::Interval(args) => handle_interval(args, &resolved, &config),
        Command::Wasserstein(args) => handle_wasserstein(args, &resolved),
        Command::Experiment(args) => handle_experiment(args, &resolved, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                RsError::Convergence { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use rskit::experiments::SweepRow;

    #[test]
    fn empty_sweep_renders_as_a_bare_header() {
        let sweep = SweepResult {
            scenario: Scenario::SampleSize,
            rows: Vec::new(),
        };
        assert_eq!(
            sweep_to_csv(&sweep),
            "grid_value,method,metric_mean,metric_se,replications,failures\n"
        );
    }

    #[test]
    fn sweep_rows_follow_the_schema_order() {
        let sweep = SweepResult {
            scenario: Scenario::Shift,
            rows: vec![SweepRow {
                grid_value: 2.0,
                method: "rs:0.2".to_string(),
                metric_mean: 0.125,
                metric_se: 0.5,
                replications: 16,
                failures: 1,
            }],
        };
        let text = sweep_to_csv(&sweep);
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("grid_value,method,metric_mean,metric_se,replications,failures")
        );
        assert_eq!(lines.next(), Some("2,rs:0.2,0.125,0.5,16,1"));
        assert_eq!(lines.next(), None);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn report_csv_flattens_nested_fields_and_vectors() {
        #[derive(Serialize)]
        struct Inner {
            flag: bool,
        }
        #[derive(Serialize)]
        struct Outer {
            x_hat: Vec<f64>,
            value: f64,
            inner: Inner,
            infinite: ExtReal,
        }
        let report = Outer {
            x_hat: vec![1.0, -0.5],
            value: 2.25,
            inner: Inner { flag: true },
            infinite: ExtReal::PosInf,
        };
        let text = report_to_csv(&report).unwrap();
        // Fields come out in the serializer's stable alphabetical order.
        assert_eq!(
            text,
            "field,value\ninfinite,inf\ninner.flag,true\nvalue,2.25\nx_hat,1.0;-0.5\n"
        );
    }

    #[test]
    fn model_args_reject_stray_loss_parameters() {
        let args = ModelArgs {
            loss: LossName::L1,
            delta: Some(0.5),
            bound: None,
            task: TaskName::Regression,
        };
        assert!(args.build().is_err());

        let args = ModelArgs {
            loss: LossName::Huber,
            delta: None,
            bound: None,
            task: TaskName::Regression,
        };
        assert!(args.build().is_err());

        let args = ModelArgs {
            loss: LossName::Huber,
            delta: Some(0.5),
            bound: None,
            task: TaskName::Regression,
        };
        let (loss, task) = args.build().unwrap();
        assert_eq!(loss, Loss::Huber { delta: 0.5 });
        assert_eq!(task, Task::Regression);
    }

    #[test]
    fn cli_parses_the_documented_invocations() {
        let cli = Cli::try_parse_from([
            "rskit", "solve-rs", "--data", "d.csv", "--loss", "l1", "--epsilon", "0.2",
        ])
        .unwrap();
        match &cli.command {
            Command::SolveRs(args) => {
                assert_eq!(args.epsilon, 0.2);
                assert_eq!(args.norm, NormName::XOnly);
            }
            _ => panic!("wrong subcommand"),
        }
        assert_eq!(cli.globals.data.as_deref(), Some(Path::new("d.csv")));

        let cli = Cli::try_parse_from([
            "rskit",
            "interval",
            "--data",
            "d.csv",
            "--epsilon",
            "0.2",
            "--beta",
            "0.05",
            "--c1",
            "2",
            "--c2",
            "1",
            "--a",
            "2",
            "--m",
            "3",
            "--n",
            "500",
        ])
        .unwrap();
        match &cli.command {
            Command::Interval(args) => {
                assert_eq!(args.beta, Some(0.05));
                assert_eq!(args.n, Some(500));
            }
            _ => panic!("wrong subcommand"),
        }

        let cli = Cli::try_parse_from([
            "rskit",
            "wasserstein",
            "--p",
            "p.csv",
            "--q",
            "q.csv",
            "--cost",
            "full_l2",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Wasserstein(_)));
    }

    #[test]
    fn unknown_config_keys_are_rejected_with_a_location() {
        let err = toml::from_str::<RunConfig>("sede = 7\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("sede"), "diagnostic names the field: {text}");
        assert!(text.contains("line 1"), "diagnostic has a line: {text}");
    }

    #[test]
    fn negative_decision_entries_parse_in_fragility() {
        let cli = Cli::try_parse_from([
            "rskit",
            "fragility",
            "--data",
            "d.csv",
            "--x",
            "1.5,-2.0",
            "--tau",
            "0.9",
        ])
        .unwrap();
        match &cli.command {
            Command::Fragility(args) => assert_eq!(args.x, vec![1.5, -2.0]),
            _ => panic!("wrong subcommand"),
        }
    }
}
