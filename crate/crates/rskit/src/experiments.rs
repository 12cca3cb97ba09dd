//! Monte Carlo harness for the model comparisons: sweeps over sample size,
//! shift degree, and robustness hyperparameters, plus an exact-distance
//! study that checks the finite-sample guarantees replication by
//! replication on finite-support ground truths.
//!
//! Every sweep uses a paired replication design: within one replication all
//! methods and grid points see the same training draw and the same test
//! draw, which removes between-method sampling noise from the comparisons.
//! Replications run in parallel on deterministic RNG substreams keyed by
//! (seed, purpose, replication), so results are bit-identical regardless of
//! thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Dataset, DiscreteDistribution, SyntheticConfig};
use crate::error::{Result, RsError};
use crate::inference;
use crate::linalg::dot;
use crate::losses::{Loss, Task};
use crate::rng::{self, Purpose};
use crate::solvers::{self, NormVariant, SolverOptions};
use crate::transport::{wasserstein, GroundCost};

// ============================================================================
// Configuration
// ============================================================================

/// Which study to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// MSE against sample size, methods trained and evaluated on the
    /// sampling distribution.
    SampleSize,
    /// MSE against shift degree: train unshifted, evaluate on targets of
    /// increasing shift.
    Shift,
    /// The boundary multiplier of the satisficing solve as a function of
    /// the slack, i.e. the radius a matching worst-case model would use.
    Correspondence,
    /// MSE of the worst-case model across its radius grid, on a shifted
    /// target, with the plain minimizer as reference.
    SensitivityDro,
    /// MSE of the satisficing model across its slack grid, same target.
    SensitivityRs,
    /// Exact-distance checks of the finite-sample guarantees on a
    /// finite-support ground truth.
    Coverage,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::SampleSize
    }
}

/// Full description of one experiment run. Unused grids are ignored by the
/// scenarios that do not sweep them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: Scenario,
    /// Sampling distribution for training draws. Its shift degree must be
    /// zero; shifts enter through `degree_grid` and `eval_degree`.
    #[serde(default)]
    pub synthetic: SyntheticConfig,
    /// Training-set size for scenarios that do not sweep it.
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_epsilon_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "default_radius_grid")]
    pub radius_grid: Vec<f64>,
    #[serde(default = "default_degree_grid")]
    pub degree_grid: Vec<f64>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Test-set size for sampled MSE evaluation.
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Atom count of the finite-support ground truth (coverage only).
    #[serde(default = "default_support_size")]
    pub support_size: usize,
    /// Shift degree of the evaluation target for the sensitivity and
    /// coverage scenarios.
    #[serde(default = "default_eval_degree")]
    pub eval_degree: f64,
}

fn default_n_train() -> usize {
    100
}

fn default_epsilon_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.3]
}

fn default_radius_grid() -> Vec<f64> {
    (0..=50).map(|i| i as f64 * 0.01).collect()
}

fn default_degree_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64).collect()
}

fn default_n_grid() -> Vec<usize> {
    vec![30, 50, 100, 200, 400, 800]
}

fn default_replications() -> usize {
    200
}

fn default_n_test() -> usize {
    10_000
}

fn default_support_size() -> usize {
    20
}

fn default_eval_degree() -> f64 {
    4.0
}

impl ExperimentConfig {
    /// The documented defaults for a scenario. Differences from the plain
    /// field defaults: the correspondence scenario sweeps a dense slack
    /// grid out to the curve's plateau, the slack-sensitivity scenario
    /// sweeps a dense grid matching the radius grid, and the coverage
    /// scenario uses small training sizes where the empirical distribution
    /// is visibly far from the truth.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let mut cfg = ExperimentConfig {
            scenario,
            synthetic: SyntheticConfig::default(),
            n_train: default_n_train(),
            epsilon_grid: default_epsilon_grid(),
            radius_grid: default_radius_grid(),
            degree_grid: default_degree_grid(),
            n_grid: default_n_grid(),
            replications: default_replications(),
            n_test: default_n_test(),
            seed: 0,
            solver: SolverOptions::default(),
            support_size: default_support_size(),
            eval_degree: default_eval_degree(),
        };
        match scenario {
            Scenario::SampleSize => {
                cfg.synthetic = SyntheticConfig::alternating(10);
            }
            Scenario::Correspondence => {
                cfg.epsilon_grid = (0..=12).map(|i| i as f64 * 0.05).collect();
            }
            Scenario::SensitivityRs => {
                cfg.epsilon_grid = (0..=50).map(|i| i as f64 * 0.01).collect();
            }
            Scenario::Coverage => {
                cfg.n_grid = vec![20, 50];
            }
            Scenario::Shift | Scenario::SensitivityDro => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.synthetic.validate()?;
        if self.synthetic.degree != 0.0 {
            return Err(RsError::validation(
                "the training distribution must be unshifted; shifts enter through \
                 degree_grid and eval_degree"
                    .to_string(),
            ));
        }
        self.solver.validate()?;
        check_real_grid("epsilon_grid", &self.epsilon_grid)?;
        check_real_grid("radius_grid", &self.radius_grid)?;
        check_real_grid("degree_grid", &self.degree_grid)?;
        if self.n_grid.is_empty() {
            return Err(RsError::validation("n_grid is empty".to_string()));
        }
        if self.n_grid.len() > MAX_GRID {
            return Err(RsError::validation(format!(
                "n_grid has more than {MAX_GRID} points"
            )));
        }
        for (i, &n) in self.n_grid.iter().enumerate() {
            if n == 0 {
                return Err(RsError::param("n_grid entries must be positive".to_string()));
            }
            if i > 0 && n <= self.n_grid[i - 1] {
                return Err(RsError::validation(
                    "n_grid must be strictly increasing".to_string(),
                ));
            }
        }
        if self.replications == 0 {
            return Err(RsError::param("replications must be at least 1".to_string()));
        }
        if self.replications > (1 << 30) {
            return Err(RsError::param(
                "replications beyond 2^30 exceed the substream space".to_string(),
            ));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(RsError::param(
                "training and test sizes must be positive".to_string(),
            ));
        }
        if self.support_size < 2 {
            return Err(RsError::param(
                "the ground-truth support needs at least 2 atoms".to_string(),
            ));
        }
        if !(self.eval_degree.is_finite() && self.eval_degree >= 0.0) {
            return Err(RsError::param(format!(
                "eval_degree must be nonnegative, got {}",
                self.eval_degree
            )));
        }
        Ok(())
    }

    fn expect_scenario(&self, wanted: Scenario) -> Result<()> {
        self.validate()?;
        if self.scenario != wanted {
            return Err(RsError::validation(format!(
                "this runner handles the {wanted:?} scenario, config says {:?}",
                self.scenario
            )));
        }
        Ok(())
    }
}

const MAX_GRID: usize = 1024;

fn check_real_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(RsError::validation(format!("{name} is empty")));
    }
    if grid.len() > MAX_GRID {
        return Err(RsError::validation(format!(
            "{name} has more than {MAX_GRID} points"
        )));
    }
    for (i, &v) in grid.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(RsError::param(format!(
                "{name} entries must be nonnegative, got {v}"
            )));
        }
        if i > 0 && v <= grid[i - 1] {
            return Err(RsError::validation(format!(
                "{name} must be strictly increasing"
            )));
        }
    }
    Ok(())
}

// ============================================================================
// Results
// ============================================================================

/// One aggregated cell of a sweep: a grid point, a method tag, and the
/// metric's mean and standard error over the successful replications.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub grid_value: f64,
    pub method: String,
    pub metric_mean: f64,
    /// Sample standard deviation divided by the square root of the
    /// replication count.
    pub metric_se: f64,
    /// Number of successful replications behind the mean.
    pub replications: usize,
    /// Number of replications lost to solver failures.
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub scenario: Scenario,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// The rows for one method, in grid order.
    pub fn method_rows(&self, method: &str) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.method == method).collect()
    }
}

fn summarize(grid_value: f64, method: String, values: Vec<f64>, failures: usize) -> SweepRow {
    let n = values.len();
    let mean = if n > 0 {
        values.iter().sum::<f64>() / n as f64
    } else {
        f64::NAN
    };
    let se = if n > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    SweepRow { grid_value, method, metric_mean: mean, metric_se: se, replications: n, failures }
}

/// Collects cell values across replications and emits one row per cell in
/// a caller-supplied order.
fn aggregate(
    per_rep: &[Vec<Option<f64>>],
    cells: usize,
    row_of: impl Fn(usize) -> (f64, String),
) -> Vec<SweepRow> {
    (0..cells)
        .map(|c| {
            let values: Vec<f64> = per_rep.iter().filter_map(|rep| rep[c]).collect();
            let failures = per_rep.len() - values.len();
            let (grid_value, method) = row_of(c);
            summarize(grid_value, method, values, failures)
        })
        .collect()
}

fn stream_index(rep: usize, grid_idx: usize) -> u64 {
    debug_assert!(grid_idx < MAX_GRID);
    rep as u64 * MAX_GRID as u64 + grid_idx as u64
}

// ============================================================================
// MSE evaluation
// ============================================================================

/// What to evaluate a decision against.
pub enum EvalTarget<'a> {
    /// Draw test points from a synthetic sampler (its shift degree
    /// included) and average the squared residual.
    Synthetic(&'a SyntheticConfig),
    /// Exact expectation over a finite support; no sampling noise.
    Discrete(&'a DiscreteDistribution),
}

/// Mean squared residual of the linear predictor over a dataset.
pub fn mse_on_dataset(x: &[f64], data: &Dataset) -> Result<f64> {
    if data.dim() != x.len() {
        return Err(RsError::shape(format!(
            "decision has {} coordinates, data rows have {}",
            x.len(),
            data.dim()
        )));
    }
    let mut acc = 0.0;
    for i in 0..data.len() {
        let e = data.label(i) - dot(data.row(i), x);
        acc += e * e;
    }
    Ok(acc / data.len() as f64)
}

/// Mean squared error of a decision on a target distribution: sampled for
/// synthetic targets (n_test points on the Test substream of `seed`),
/// exact for finite-support targets.
pub fn evaluate_mse(x: &[f64], target: EvalTarget, n_test: usize, seed: u64) -> Result<f64> {
    match target {
        EvalTarget::Synthetic(cfg) => {
            let mut r = rng::substream(seed, Purpose::Test, 0);
            let data = cfg.sample_dataset(n_test, &mut r)?;
            mse_on_dataset(x, &data)
        }
        EvalTarget::Discrete(dist) => {
            let d = dist.dim();
            if x.len() + 1 != d {
                return Err(RsError::shape(format!(
                    "decision has {} coordinates, atoms have dimension {d}",
                    x.len()
                )));
            }
            Ok(dist.expect(|z| {
                let e = z[d - 1] - dot(&z[..d - 1], x);
                e * e
            }))
        }
    }
}

/// Population MSE of a decision under a synthetic sampler, in closed form:
/// noise variance plus delta' E[uu'] delta, where delta is the gap to the
/// (possibly shifted) true parameter and E[uu'] = var * I + mean^2 * 11'.
pub fn theoretical_mse(cfg: &SyntheticConfig, x: &[f64]) -> Result<f64> {
    let x_eff = cfg.shifted_parameter()?;
    if x.len() != x_eff.len() {
        return Err(RsError::shape(format!(
            "decision has {} coordinates, the sampler has {}",
            x.len(),
            x_eff.len()
        )));
    }
    let delta: Vec<f64> = x.iter().zip(x_eff.iter()).map(|(a, b)| a - b).collect();
    let s: f64 = delta.iter().sum();
    Ok(cfg.noise_std_sq
        + cfg.feature_var * dot(&delta, &delta)
        + cfg.feature_mean * cfg.feature_mean * s * s)
}

// ============================================================================
// Sweep runners
// ============================================================================

/// Runs whichever scenario the config names.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<SweepResult> {
    match cfg.scenario {
        Scenario::SampleSize => run_sample_size_sweep(cfg),
        Scenario::Shift => run_shift_sweep(cfg),
        Scenario::Correspondence => run_correspondence(cfg),
        Scenario::SensitivityDro | Scenario::SensitivityRs => run_sensitivity(cfg),
        Scenario::Coverage => run_coverage(cfg),
    }
}

/// MSE against sample size on the sampling distribution itself: for every
/// N in n_grid, the plain minimizer and one satisficing model per slack in
/// epsilon_grid, trained on fresh paired draws.
pub fn run_sample_size_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.expect_scenario(Scenario::SampleSize)?;
    let loss = Loss::L1;
    let task = Task::Regression;
    let n_methods = 1 + cfg.epsilon_grid.len();
    let cells = cfg.n_grid.len() * n_methods;
    let per_rep: Vec<Vec<Option<f64>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut out = vec![None; cells];
            let mut tr = rng::substream(cfg.seed, Purpose::Test, rep as u64);
            let Ok(test) = cfg.synthetic.sample_dataset(cfg.n_test, &mut tr) else {
                return out;
            };
            for (ni, &n) in cfg.n_grid.iter().enumerate() {
                let mut sr = rng::substream(cfg.seed, Purpose::Train, stream_index(rep, ni));
                let Ok(train) = cfg.synthetic.sample_dataset(n, &mut sr) else {
                    continue;
                };
                out[ni * n_methods] = solvers::solve_erm(&loss, task, &train, &cfg.solver)
                    .ok()
                    .and_then(|s| mse_on_dataset(&s.x_hat, &test).ok());
                for (ei, &eps) in cfg.epsilon_grid.iter().enumerate() {
                    out[ni * n_methods + 1 + ei] =
                        solvers::solve_rs(&loss, task, &train, eps, NormVariant::XOnly, &cfg.solver)
                            .ok()
                            .and_then(|s| mse_on_dataset(&s.x_hat, &test).ok());
                }
            }
            out
        })
        .collect();
    let rows = aggregate(&per_rep, cells, |c| {
        let ni = c / n_methods;
        let mi = c % n_methods;
        let method = if mi == 0 {
            "erm".to_string()
        } else {
            format!("rs:{}", cfg.epsilon_grid[mi - 1])
        };
        (cfg.n_grid[ni] as f64, method)
    });
    Ok(SweepResult { scenario: Scenario::SampleSize, rows })
}

/// MSE against shift degree: every method trains once per replication on
/// unshifted data of size n_train, then is evaluated on a target of each
/// degree in degree_grid.
pub fn run_shift_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.expect_scenario(Scenario::Shift)?;
    let loss = Loss::L1;
    let task = Task::Regression;
    let n_methods = 1 + cfg.epsilon_grid.len();
    let cells = cfg.degree_grid.len() * n_methods;
    let per_rep: Vec<Vec<Option<f64>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut out = vec![None; cells];
            let mut sr = rng::substream(cfg.seed, Purpose::Train, rep as u64);
            let Ok(train) = cfg.synthetic.sample_dataset(cfg.n_train, &mut sr) else {
                return out;
            };
            let mut decisions: Vec<Option<Vec<f64>>> = Vec::with_capacity(n_methods);
            decisions.push(
                solvers::solve_erm(&loss, task, &train, &cfg.solver)
                    .ok()
                    .map(|s| s.x_hat),
            );
            for &eps in &cfg.epsilon_grid {
                decisions.push(
                    solvers::solve_rs(&loss, task, &train, eps, NormVariant::XOnly, &cfg.solver)
                        .ok()
                        .map(|s| s.x_hat),
                );
            }
            for (di, &deg) in cfg.degree_grid.iter().enumerate() {
                let shifted = SyntheticConfig { degree: deg, ..cfg.synthetic.clone() };
                let mut er =
                    rng::substream(cfg.seed, Purpose::ShiftTruth, stream_index(rep, di));
                let Ok(test) = shifted.sample_dataset(cfg.n_test, &mut er) else {
                    continue;
                };
                for (mi, dec) in decisions.iter().enumerate() {
                    out[di * n_methods + mi] = dec
                        .as_ref()
                        .and_then(|x| mse_on_dataset(x, &test).ok());
                }
            }
            out
        })
        .collect();
    let rows = aggregate(&per_rep, cells, |c| {
        let di = c / n_methods;
        let mi = c % n_methods;
        let method = if mi == 0 {
            "erm".to_string()
        } else {
            format!("rs:{}", cfg.epsilon_grid[mi - 1])
        };
        (cfg.degree_grid[di], method)
    });
    Ok(SweepResult { scenario: Scenario::Shift, rows })
}

/// The boundary multiplier of the satisficing solve as a function of the
/// slack: for each epsilon, the mean of lambda_hat over replications. A
/// worst-case model run at exactly this radius reproduces the satisficing
/// decision, so the curve is the slack-to-radius correspondence.
pub fn run_correspondence(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.expect_scenario(Scenario::Correspondence)?;
    let loss = Loss::L1;
    let task = Task::Regression;
    let cells = cfg.epsilon_grid.len();
    let per_rep: Vec<Vec<Option<f64>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut out = vec![None; cells];
            let mut sr = rng::substream(cfg.seed, Purpose::Train, rep as u64);
            let Ok(train) = cfg.synthetic.sample_dataset(cfg.n_train, &mut sr) else {
                return out;
            };
            for (ei, &eps) in cfg.epsilon_grid.iter().enumerate() {
                out[ei] =
                    solvers::solve_rs(&loss, task, &train, eps, NormVariant::XOnly, &cfg.solver)
                        .ok()
                        .map(|s| s.lambda_hat);
            }
            out
        })
        .collect();
    let rows = aggregate(&per_rep, cells, |c| (cfg.epsilon_grid[c], "rs".to_string()));
    Ok(SweepResult { scenario: Scenario::Correspondence, rows })
}

/// Hyperparameter sensitivity: sweeps the worst-case model's radius grid
/// (or the satisficing model's slack grid) and reports MSE on a target
/// shifted by eval_degree, with the plain minimizer as the paired
/// reference at grid value 0.
pub fn run_sensitivity(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let sweep_dro = match cfg.scenario {
        Scenario::SensitivityDro => true,
        Scenario::SensitivityRs => false,
        other => {
            return Err(RsError::validation(format!(
                "this runner handles the sensitivity scenarios, config says {other:?}"
            )))
        }
    };
    let loss = Loss::L1;
    let task = Task::Regression;
    let grid: &[f64] = if sweep_dro { &cfg.radius_grid } else { &cfg.epsilon_grid };
    let cells = 1 + grid.len();
    let eval_cfg = SyntheticConfig { degree: cfg.eval_degree, ..cfg.synthetic.clone() };
    eval_cfg.shifted_parameter()?;
    let per_rep: Vec<Vec<Option<f64>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut out = vec![None; cells];
            let mut sr = rng::substream(cfg.seed, Purpose::Train, rep as u64);
            let Ok(train) = cfg.synthetic.sample_dataset(cfg.n_train, &mut sr) else {
                return out;
            };
            let mut er = rng::substream(cfg.seed, Purpose::ShiftTruth, rep as u64);
            let Ok(test) = eval_cfg.sample_dataset(cfg.n_test, &mut er) else {
                return out;
            };
            out[0] = solvers::solve_erm(&loss, task, &train, &cfg.solver)
                .ok()
                .and_then(|s| mse_on_dataset(&s.x_hat, &test).ok());
            for (gi, &g) in grid.iter().enumerate() {
                let x = if sweep_dro {
                    solvers::solve_dro(&loss, task, &train, g, NormVariant::XOnly, &cfg.solver)
                        .ok()
                        .map(|s| s.x_hat)
                } else {
                    solvers::solve_rs(&loss, task, &train, g, NormVariant::XOnly, &cfg.solver)
                        .ok()
                        .map(|s| s.x_hat)
                };
                out[1 + gi] = x.and_then(|x| mse_on_dataset(&x, &test).ok());
            }
            out
        })
        .collect();
    let tag = if sweep_dro { "dro" } else { "rs" };
    let rows = aggregate(&per_rep, cells, |c| {
        if c == 0 {
            (0.0, "erm".to_string())
        } else {
            (grid[c - 1], tag.to_string())
        }
    });
    Ok(SweepResult { scenario: cfg.scenario, rows })
}

// ============================================================================
// Coverage of the finite-sample guarantees
// ============================================================================

fn distribution_dataset(dist: &DiscreteDistribution) -> Result<Dataset> {
    let d = dist.dim();
    let rows: Vec<Vec<f64>> = (0..dist.len()).map(|i| dist.atom(i)[..d - 1].to_vec()).collect();
    let labels: Vec<f64> = (0..dist.len()).map(|i| dist.atom(i)[d - 1]).collect();
    Dataset::from_rows(rows, labels)
}

fn expected_abs_loss(dist: &DiscreteDistribution, x: &[f64]) -> f64 {
    let d = dist.dim();
    dist.expect(|z| (z[d - 1] - dot(&z[..d - 1], x)).abs())
}

/// Exact-distance checks of the guarantees: draws training sets from a
/// finite-support ground truth, solves the satisficing program, computes
/// the exact transport distance to the truth and the exact optimal losses,
/// and records the pass rate of three inequalities per slack value:
///
/// - `chain`: lower arm <= optimal loss <= realized loss <= upper arm,
///   with arms built from the exact distance;
/// - `regret`: realized excess risk within the excess-risk bound at the
///   exact distance;
/// - `shifted_chain`: the same bracket against a target whose labels are
///   regenerated under the parameter shifted by eval_degree.
///
/// All pass rates are expected to be exactly 1; any violating replication
/// appends a diagnostic row carrying its residual and stream index.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.expect_scenario(Scenario::Coverage)?;
    let loss = Loss::L1;
    let task = Task::Regression;
    let tol = 1e-5;

    let mut gr = rng::substream(cfg.seed, Purpose::GroundTruth, 0);
    let p_star = cfg.synthetic.discrete_ground_truth(cfg.support_size, &mut gr)?;
    let shifted_cfg = SyntheticConfig { degree: cfg.eval_degree, ..cfg.synthetic.clone() };
    let x_tilde = shifted_cfg.shifted_parameter()?;
    let x_star = &cfg.synthetic.x_star;
    // the shifted target keeps the feature atoms and noise realizations of
    // the truth; only the linear part of each label moves
    let d = p_star.dim();
    let tilde_atoms: Vec<Vec<f64>> = (0..p_star.len())
        .map(|i| {
            let z = p_star.atom(i);
            let mut a = z.to_vec();
            let u = &z[..d - 1];
            a[d - 1] += dot(u, &x_tilde) - dot(u, x_star);
            a
        })
        .collect();
    let p_tilde = DiscreteDistribution::new(tilde_atoms, p_star.weights().to_vec())?;

    let star_data = distribution_dataset(&p_star)?;
    let tilde_data = distribution_dataset(&p_tilde)?;
    let j_star =
        solvers::solve_erm_weighted(&loss, task, &star_data, p_star.weights(), &cfg.solver)?
            .min_loss;
    let j_tilde =
        solvers::solve_erm_weighted(&loss, task, &tilde_data, p_tilde.weights(), &cfg.solver)?
            .min_loss;

    let n_eps = cfg.epsilon_grid.len();
    let checks = 3;
    let cells = cfg.n_grid.len() * n_eps * checks;
    let per_rep: Vec<RepOut> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut out = RepOut { cells: vec![None; cells], violations: Vec::new() };
            for (ni, &n) in cfg.n_grid.iter().enumerate() {
                let stream = stream_index(rep, ni);
                let mut sr = rng::substream(cfg.seed, Purpose::Train, stream);
                let Ok(train) = p_star.sample_dataset(n, &mut sr) else {
                    continue;
                };
                let p_hat = DiscreteDistribution::from_dataset(&train);
                let Ok((dist_star, _)) = wasserstein(&p_star, &p_hat, GroundCost::FullL2) else {
                    continue;
                };
                let Ok((dist_tilde, _)) = wasserstein(&p_tilde, &p_hat, GroundCost::FullL2)
                else {
                    continue;
                };
                let d_star = dist_star.expect_finite();
                let d_tilde = dist_tilde.expect_finite();
                for (ei, &eps) in cfg.epsilon_grid.iter().enumerate() {
                    let base = (ni * n_eps + ei) * checks;
                    let Ok(rs) = solvers::solve_rs(
                        &loss,
                        task,
                        &train,
                        eps,
                        NormVariant::Augmented,
                        &cfg.solver,
                    ) else {
                        continue;
                    };
                    let l_h = NormVariant::Augmented.value(&rs.x_hat);
                    let anchor = rs.tau / (1.0 + eps);
                    let realized = expected_abs_loss(&p_star, &rs.x_hat);
                    let realized_tilde = expected_abs_loss(&p_tilde, &rs.x_hat);

                    // bracket around the optimal loss at the exact distance
                    let margins = [
                        j_star - (anchor - l_h * d_star),
                        realized - j_star,
                        (rs.tau + rs.k_tau * d_star) - realized,
                    ];
                    record_check(&mut out, base, "chain", margins, tol, n, eps, rep, stream);

                    // excess risk against its exact-distance bound
                    let bound = inference::generalization_bound(eps, j_star, l_h, d_star)
                        .unwrap_or(f64::NAN);
                    let margins = [bound - (realized - j_star), 0.0, 0.0];
                    record_check(&mut out, base + 1, "regret", margins, tol, n, eps, rep, stream);

                    // the same bracket against the shifted target
                    let margins = [
                        j_tilde - (anchor - l_h * d_tilde),
                        realized_tilde - j_tilde,
                        (rs.tau + rs.k_tau * d_tilde) - realized_tilde,
                    ];
                    record_check(
                        &mut out,
                        base + 2,
                        "shifted_chain",
                        margins,
                        tol,
                        n,
                        eps,
                        rep,
                        stream,
                    );
                }
            }
            out
        })
        .collect();

    let cell_views: Vec<Vec<Option<f64>>> = per_rep.iter().map(|r| r.cells.clone()).collect();
    let mut rows = aggregate(&cell_views, cells, |c| {
        let ni = c / (n_eps * checks);
        let rest = c % (n_eps * checks);
        let ei = rest / checks;
        let name = ["chain", "regret", "shifted_chain"][rest % checks];
        (cfg.n_grid[ni] as f64, format!("{name}:{}", cfg.epsilon_grid[ei]))
    });
    for rep in per_rep {
        rows.extend(rep.violations);
    }
    Ok(SweepResult { scenario: Scenario::Coverage, rows })
}

struct RepOut {
    cells: Vec<Option<f64>>,
    violations: Vec<SweepRow>,
}

#[allow(clippy::too_many_arguments)]
fn record_check(
    out: &mut RepOut,
    cell: usize,
    name: &str,
    margins: [f64; 3],
    tol: f64,
    n: usize,
    eps: f64,
    rep: usize,
    stream: u64,
) {
    let worst = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = worst >= -tol;
    out.cells[cell] = Some(if pass { 1.0 } else { 0.0 });
    if !pass {
        out.violations.push(SweepRow {
            grid_value: n as f64,
            method: format!("violation:{name} eps={eps} rep={rep} stream={stream}"),
            metric_mean: worst,
            metric_se: 0.0,
            replications: 1,
            failures: 1,
        });
    }
}

// ============================================================================
// Tests
// ============================================================================
