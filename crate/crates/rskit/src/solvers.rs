//! Solvers for empirical risk minimization, norm-regularized risk
//! minimization, robust satisficing, and Wasserstein distributionally robust
//! optimization with linear predictors.
//!
//! All entry points share one minimizer for problems of the form
//!
//!   min_x  sum_i w_i L(z_i(x)) + lambda * R(x) + ridge * ||x||^2
//!
//! where R is either ||x||_2 or sqrt(||x||_2^2 + 1). A short subgradient
//! descent warmup (decaying or Polyak step sizes) is followed by damped
//! Newton steps on a graduated smoothing of the kinks, driving the iterate
//! to the unique ridge-tiebroken optimum far beyond subgradient accuracy.
//!
//! The robust satisficing program min ||x|| s.t. empirical loss <= tau is
//! solved by bisecting the regularization weight along the path
//! x(lambda) = argmin loss + lambda * R: the empirical loss of x(lambda) is
//! nondecreasing in lambda, and the largest feasible lambda yields the
//! minimum-norm point on the constraint boundary. The distributionally
//! robust counterpart over a Wasserstein ball of radius r reduces exactly to
//! the regularized problem with lambda = r * Lip(L).

use serde::{Deserialize, Serialize};

use crate::distributions::Dataset;
use crate::error::{Result, RsError};
use crate::linalg::{dot, norm2, solve_spd};
use crate::losses::{Loss, Task};

// ============================================================================
// Options and result types
// ============================================================================

/// Step-size rule for the subgradient warmup phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// eta_t = eta_0 / sqrt(t) with iterate averaging.
    Decaying,
    /// Polyak steps toward a moving target slightly below the best value.
    Polyak,
}

/// Solver controls shared by every entry point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    /// Iteration budget for the Newton phase of one minimization.
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_step_rule")]
    pub step_rule: StepRule,
    /// Relative width at which path bisections stop; also scales internal
    /// tolerances. Must lie in (0, 1e-2].
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Feasibility slack allowed on satisficing constraints, in (0, 1e-2].
    #[serde(default = "default_constraint_tol")]
    pub constraint_tol: f64,
    /// Weight of the quadratic tie-break that makes every optimum unique.
    #[serde(default = "default_ridge")]
    pub ridge_tiebreak: f64,
}

fn default_max_iters() -> usize {
    500
}

fn default_step_rule() -> StepRule {
    StepRule::Decaying
}

fn default_rel_tol() -> f64 {
    1e-8
}

fn default_constraint_tol() -> f64 {
    1e-6
}

fn default_ridge() -> f64 {
    1e-8
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: default_max_iters(),
            step_rule: default_step_rule(),
            rel_tol: default_rel_tol(),
            constraint_tol: default_constraint_tol(),
            ridge_tiebreak: default_ridge(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(RsError::param("max_iters must be positive".to_string()));
        }
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("constraint_tol", self.constraint_tol),
            ("ridge_tiebreak", self.ridge_tiebreak),
        ] {
            if !(v.is_finite() && v > 0.0 && v <= 1e-2) {
                return Err(RsError::param(format!(
                    "{name} must lie in (0, 1e-2], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Which norm the satisficing and robust programs control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormVariant {
    /// ||x||_2: pairs with feature-only transport costs.
    XOnly,
    /// sqrt(||x||_2^2 + 1): pairs with transport costs on the joint (u, y).
    Augmented,
}

impl NormVariant {
    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            NormVariant::XOnly => norm2(x),
            NormVariant::Augmented => (dot(x, x) + 1.0).sqrt(),
        }
    }
}

/// Counters and residuals describing how a solve went.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub warmup_iters: usize,
    pub newton_iters: usize,
    pub bisection_steps: usize,
    /// tau minus the empirical loss at the returned point, for constrained
    /// solves; zero otherwise.
    pub constraint_residual: f64,
    pub converged: bool,
}

/// Result of an unconstrained empirical risk minimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErmSolution {
    pub x_hat: Vec<f64>,
    pub min_loss: f64,
    pub diagnostics: Diagnostics,
}

/// Target level tau = (1 + epsilon) * min_loss and the minimum it scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub tau: f64,
    pub erm_min_loss: f64,
}

/// Solution of the robust satisficing program
/// min R(x) s.t. empirical loss(x) <= tau.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsSolution {
    pub x_hat: Vec<f64>,
    /// Fragility of x_hat: Lip(L) * R(x_hat).
    pub k_tau: f64,
    /// Regularization weight whose path point reproduces x_hat.
    pub lambda_hat: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub erm_min_loss: f64,
    pub norm_variant: NormVariant,
    pub diagnostics: Diagnostics,
}

/// Solution of the Wasserstein robust problem at a fixed ball radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroSolution {
    pub x_hat: Vec<f64>,
    pub radius: f64,
    pub empirical_loss: f64,
    /// Worst-case expected loss over the ball: empirical loss plus
    /// radius * Lip(L) * R(x_hat).
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

// ============================================================================
// Empirical losses
// ============================================================================

fn check_inputs(loss: &Loss, task: Task, data: &Dataset, opts: &SolverOptions) -> Result<()> {
    loss.validate()?;
    opts.validate()?;
    if task == Task::Classification {
        for i in 0..data.len() {
            let y = data.label(i);
            if y != 1.0 && y != -1.0 {
                return Err(RsError::validation(format!(
                    "classification labels must be -1 or +1; row {} has {y}",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

fn check_weights(data: &Dataset, weights: &[f64]) -> Result<()> {
    if weights.len() != data.len() {
        return Err(RsError::shape(format!(
            "{} weights for {} rows",
            weights.len(),
            data.len()
        )));
    }
    if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
        return Err(RsError::validation("weights must be nonnegative".to_string()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(RsError::validation(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Mean loss (1/N) sum_i L(z_i(x)).
pub fn empirical_loss(loss: &Loss, task: Task, data: &Dataset, x: &[f64]) -> Result<f64> {
    if x.len() != data.dim() {
        return Err(RsError::shape(format!(
            "decision has dimension {}, features {}",
            x.len(),
            data.dim()
        )));
    }
    loss.validate()?;
    let n = data.len() as f64;
    Ok((0..data.len())
        .map(|i| loss.value(task.margin(x, data.row(i), data.label(i))))
        .sum::<f64>()
        / n)
}

/// Weighted mean loss sum_i w_i L(z_i(x)) with weights summing to one.
pub fn empirical_loss_weighted(
    loss: &Loss,
    task: Task,
    data: &Dataset,
    weights: &[f64],
    x: &[f64],
) -> Result<f64> {
    if x.len() != data.dim() {
        return Err(RsError::shape(format!(
            "decision has dimension {}, features {}",
            x.len(),
            data.dim()
        )));
    }
    loss.validate()?;
    check_weights(data, weights)?;
    Ok((0..data.len())
        .map(|i| weights[i] * loss.value(task.margin(x, data.row(i), data.label(i))))
        .sum::<f64>())
}

// ============================================================================
// Core minimizer
// ============================================================================

struct Problem<'a> {
    loss: &'a Loss,
    task: Task,
    data: &'a Dataset,
    weights: Option<&'a [f64]>,
    lambda: f64,
    variant: NormVariant,
    ridge: f64,
}

impl Problem<'_> {
    fn weight(&self, i: usize) -> f64 {
        match self.weights {
            Some(w) => w[i],
            None => 1.0 / self.data.len() as f64,
        }
    }

    fn weighted_loss(&self, x: &[f64]) -> f64 {
        (0..self.data.len())
            .map(|i| {
                self.weight(i)
                    * self
                        .loss
                        .value(self.task.margin(x, self.data.row(i), self.data.label(i)))
            })
            .sum()
    }

    /// Exact nonsmooth objective.
    fn objective(&self, x: &[f64]) -> f64 {
        self.weighted_loss(x) + self.lambda * self.variant.value(x) + self.ridge * dot(x, x)
    }

    /// A subgradient of the exact objective.
    fn subgradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.data.len() {
            let u = self.data.row(i);
            let y = self.data.label(i);
            let z = self.task.margin(x, u, y);
            let c = self.weight(i) * self.loss.subgradient(z) * self.task.margin_scale(y);
            for (o, &uj) in out.iter_mut().zip(u) {
                *o += c * uj;
            }
        }
        let nx = norm2(x);
        let scale = match self.variant {
            NormVariant::XOnly => {
                if nx > 0.0 {
                    self.lambda / nx
                } else {
                    0.0
                }
            }
            NormVariant::Augmented => self.lambda / (nx * nx + 1.0).sqrt(),
        };
        for (o, &xj) in out.iter_mut().zip(x) {
            *o += scale * xj + 2.0 * self.ridge * xj;
        }
    }

    fn norm_smooth_c(&self, mu: f64) -> f64 {
        match self.variant {
            NormVariant::XOnly => mu * mu,
            NormVariant::Augmented => 1.0,
        }
    }

    /// Smoothed objective value at smoothing level mu.
    fn smooth_value(&self, x: &[f64], mu: f64) -> f64 {
        let mut f = 0.0;
        for i in 0..self.data.len() {
            let z = self.task.margin(x, self.data.row(i), self.data.label(i));
            f += self.weight(i) * self.loss.smoothed_vgh(z, mu).0;
        }
        let c = self.norm_smooth_c(mu);
        f + self.lambda * (dot(x, x) + c).sqrt() + self.ridge * dot(x, x)
    }

    /// Smoothed objective with gradient and Hessian.
    fn smooth_vgh(&self, x: &[f64], mu: f64, g: &mut [f64], h: &mut [f64]) -> f64 {
        let m = x.len();
        let mut f = 0.0;
        g.fill(0.0);
        h.fill(0.0);
        for i in 0..self.data.len() {
            let u = self.data.row(i);
            let y = self.data.label(i);
            let z = self.task.margin(x, u, y);
            let (v, d1, d2) = self.loss.smoothed_vgh(z, mu);
            let w = self.weight(i);
            let s = self.task.margin_scale(y);
            f += w * v;
            let gc = w * d1 * s;
            let hc = w * d2 * s * s;
            for p in 0..m {
                g[p] += gc * u[p];
                if hc != 0.0 {
                    let hu = hc * u[p];
                    for q in p..m {
                        h[p * m + q] += hu * u[q];
                    }
                }
            }
        }
        // norm term: grad lambda x / r, hessian lambda (I - x x' / r^2) / r
        let c = self.norm_smooth_c(mu);
        let r = (dot(x, x) + c).sqrt();
        f += self.lambda * r + self.ridge * dot(x, x);
        for p in 0..m {
            g[p] += self.lambda * x[p] / r + 2.0 * self.ridge * x[p];
            for q in p..m {
                let eye = if p == q { 1.0 } else { 0.0 };
                h[p * m + q] +=
                    self.lambda * (eye - x[p] * x[q] / (r * r)) / r + 2.0 * self.ridge * eye;
            }
        }
        for p in 0..m {
            for q in 0..p {
                h[p * m + q] = h[q * m + p];
            }
        }
        f
    }

    /// Typical gradient magnitude, used to scale step sizes and tolerances.
    fn gradient_scale(&self) -> f64 {
        let mean_u: f64 = (0..self.data.len())
            .map(|i| self.weight(i) * norm2(self.data.row(i)))
            .sum();
        let lip = self.loss.lipschitz().finite().unwrap_or_else(|| {
            let zmax = (0..self.data.len())
                .map(|i| self.data.label(i).abs())
                .fold(0.0, f64::max);
            2.0 * (zmax + 1.0)
        });
        lip * mean_u + self.lambda + 1.0
    }
}

fn loss_has_kinks(loss: &Loss) -> bool {
    matches!(
        loss,
        Loss::Hinge | Loss::L1 | Loss::Insensitive { .. } | Loss::Pinball { .. }
    )
}

struct MinOut {
    x: Vec<f64>,
    warmup_iters: usize,
    newton_iters: usize,
    converged: bool,
}

/// Minimizes the problem objective: subgradient warmup from a cold start,
/// then damped Newton on a ladder of smoothing levels.
fn minimize(p: &Problem, opts: &SolverOptions, x0: Option<&[f64]>) -> Result<MinOut> {
    let m = p.data.dim();
    let warm = x0.is_some();
    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; m]);
    let gscale = p.gradient_scale();

    let mut warmup_iters = 0;
    if !warm {
        warmup_iters = opts.max_iters.min(60);
        subgradient_warmup(p, &mut x, warmup_iters, opts.step_rule, gscale);
    }

    // smoothing ladder: kinked objectives sweep mu downward, smooth ones go
    // straight to the floor level (where the smoothers are inert)
    let needs_mu = loss_has_kinks(p.loss)
        || (p.variant == NormVariant::XOnly && p.lambda > 0.0)
        || matches!(p.loss, Loss::Insensitive { .. });
    let mu_floor = 1e-12;
    let mut stages = Vec::new();
    if needs_mu {
        let mut mu = if warm { 1e-5 } else { 1e-1 };
        while mu > mu_floor * 1.5 {
            stages.push(mu);
            mu *= 0.1;
        }
    }
    stages.push(mu_floor);

    let mut g = vec![0.0; m];
    let mut h = vec![0.0; m * m];
    let mut hs = vec![0.0; m * m];
    let mut step = vec![0.0; m];
    let mut newton_iters = 0;
    let mut converged = false;
    let last_stage = stages.len() - 1;
    for (si, &mu) in stages.iter().enumerate() {
        // the floor must undercut the ridge tie-break curvature, or flat
        // valleys would stop short of the minimum-norm point
        let gtol = gscale * f64::max(1e-5 * mu, 1e-14);
        let xtol = 1e-12;
        let mut stage_done = false;
        for _ in 0..60 {
            if newton_iters >= opts.max_iters {
                break;
            }
            let f = p.smooth_vgh(&x, mu, &mut g, &mut h);
            let gn = norm2(&g);
            if gn <= gtol {
                stage_done = true;
                break;
            }
            hs.copy_from_slice(&h);
            let solved = solve_spd(&mut hs, m, &g, &mut step);
            if !solved {
                step.copy_from_slice(&g);
            }
            for s in step.iter_mut() {
                *s = -*s;
            }
            let mut slope = dot(&g, &step);
            if slope >= 0.0 {
                // fall back to steepest descent if the system solve degraded
                for (s, &gi) in step.iter_mut().zip(&g) {
                    *s = -gi;
                }
                slope = -dot(&g, &g);
            }
            newton_iters += 1;
            // Armijo backtracking
            let mut t = 1.0;
            let mut moved = false;
            while t >= 1e-16 {
                let mut xt = x.clone();
                for (xi, &si) in xt.iter_mut().zip(&step) {
                    *xi += t * si;
                }
                if p.smooth_value(&xt, mu) <= f + 0.25 * t * slope {
                    let delta = t * norm2(&step);
                    x = xt;
                    moved = true;
                    if delta <= xtol * (1.0 + norm2(&x)) {
                        stage_done = true;
                    }
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                // numerical floor of the line search: the iterate is as good
                // as this smoothing level allows
                stage_done = true;
            }
            if stage_done {
                break;
            }
        }
        if si == last_stage {
            converged = stage_done;
        }
        if newton_iters >= opts.max_iters {
            converged = false;
            break;
        }
    }
    Ok(MinOut { x, warmup_iters, newton_iters, converged })
}

fn subgradient_warmup(p: &Problem, x: &mut Vec<f64>, iters: usize, rule: StepRule, gscale: f64) {
    let m = x.len();
    let eta0 = 1.0 / gscale;
    let mut g = vec![0.0; m];
    let mut best = x.clone();
    let mut best_f = p.objective(x);
    let mut avg = vec![0.0; m];
    let mut avg_count = 0usize;
    for t in 1..=iters {
        p.subgradient(x, &mut g);
        let gn2 = dot(&g, &g);
        if gn2 <= 1e-30 {
            break;
        }
        let f = p.objective(x);
        if f < best_f {
            best_f = f;
            best.copy_from_slice(x);
        }
        let eta = match rule {
            StepRule::Decaying => eta0 / (t as f64).sqrt(),
            StepRule::Polyak => {
                let slack = 0.1 * (1.0 + best_f.abs()) / t as f64;
                ((f - (best_f - slack)) / gn2).clamp(0.0, 10.0 * eta0)
            }
        };
        for (xi, &gi) in x.iter_mut().zip(&g) {
            *xi -= eta * gi;
        }
        // average the tail half of the trajectory
        if 2 * t >= iters {
            avg_count += 1;
            for (a, &xi) in avg.iter_mut().zip(x.iter()) {
                *a += (xi - *a) / avg_count as f64;
            }
        }
    }
    let f_final = p.objective(x);
    if f_final < best_f {
        best_f = f_final;
        best.copy_from_slice(x);
    }
    if avg_count > 0 && p.objective(&avg) < best_f {
        best.copy_from_slice(&avg);
    }
    x.copy_from_slice(&best);
}

// ============================================================================
// Public solves
// ============================================================================

/// Minimizes the mean loss over x, with the quadratic tie-break selecting
/// the minimum-norm point of a flat optimal set.
pub fn solve_erm(loss: &Loss, task: Task, data: &Dataset, opts: &SolverOptions) -> Result<ErmSolution> {
    solve_erm_inner(loss, task, data, None, opts)
}

/// Weighted empirical risk minimization with weights summing to one.
pub fn solve_erm_weighted(
    loss: &Loss,
    task: Task,
    data: &Dataset,
    weights: &[f64],
    opts: &SolverOptions,
) -> Result<ErmSolution> {
    check_weights(data, weights)?;
    solve_erm_inner(loss, task, data, Some(weights), opts)
}

fn solve_erm_inner(
    loss: &Loss,
    task: Task,
    data: &Dataset,
    weights: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<ErmSolution> {
    check_inputs(loss, task, data, opts)?;
    let p = Problem {
        loss,
        task,
        data,
        weights,
        lambda: 0.0,
        variant: NormVariant::XOnly,
        ridge: opts.ridge_tiebreak,
    };
    let out = minimize(&p, opts, None)?;
    let min_loss = p.weighted_loss(&out.x);
    Ok(ErmSolution {
        x_hat: out.x,
        min_loss,
        diagnostics: Diagnostics {
            warmup_iters: out.warmup_iters,
            newton_iters: out.newton_iters,
            bisection_steps: 0,
            constraint_residual: 0.0,
            converged: out.converged,
        },
    })
}

/// Minimizes mean loss + lambda * R(x).
pub fn solve_regularized(
    loss: &Loss,
    task: Task,
    data: &Dataset,
    lambda: f64,
    variant: NormVariant,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    check_inputs(loss, task, data, opts)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(RsError::param(format!(
            "regularization weight must be nonnegative, got {lambda}"
        )));
    }
    let p = Problem {
        loss,
        task,
        data,
        weights: None,
        lambda,
        variant,
        ridge: opts.ridge_tiebreak,
    };
    Ok(minimize(&p, opts, None)?.x)
}

/// The satisficing target tau = (1 + epsilon) * min_loss together with the
/// empirical minimum it scales.
pub fn reference_value(
    loss: &Loss,
    task: Task,
    data: &Dataset,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<ReferenceValue> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(RsError::param(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    let erm = solve_erm(loss, task, data, opts)?;
    Ok(ReferenceValue {
        tau: (1.0 + epsilon) * erm.min_loss,
        erm_min_loss: erm.min_loss,
    })
}

/// Solves the robust satisficing program: minimize R(x) subject to the mean
/// loss staying at or below tau = (1 + epsilon) * empirical minimum. Returns
/// the minimizer together with its fragility k_tau = Lip(L) * R(x_hat) and
/// the path weight lambda_hat at which the regularized problem reproduces it.
pub fn solve_rs(
    loss: &Loss,
    task: Task,
    data: &Dataset,
    epsilon: f64,
    variant: NormVariant,
    opts: &SolverOptions,
) -> Result<RsSolution> {
    check_inputs(loss, task, data, opts)?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(RsError::param(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    let lip = loss.lipschitz_required()?;
    if task == Task::Classification && variant == NormVariant::Augmented {
        return Err(RsError::unsupported(
            "fragility calibration for classification is defined for the feature-only norm"
                .to_string(),
        ));
    }

    let erm = solve_erm(loss, task, data, opts)?;
    let tau = (1.0 + epsilon) * erm.min_loss;
    let m = data.dim();

    // if the zero decision already meets the target, it is the minimum-norm
    // feasible point outright
    let zero = vec![0.0; m];
    let emp0 = empirical_loss(loss, task, data, &zero)?;
    let max_u = (0..data.len()).map(|i| norm2(data.row(i))).fold(0.0, f64::max);
    if emp0 <= tau {
        let k_tau = lip * variant.value(&zero);
        return Ok(RsSolution {
            x_hat: zero,
            k_tau,
            lambda_hat: lip * max_u + 1.0,
            tau,
            epsilon,
            erm_min_loss: erm.min_loss,
            norm_variant: variant,
            diagnostics: Diagnostics {
                warmup_iters: erm.diagnostics.warmup_iters,
                newton_iters: erm.diagnostics.newton_iters,
                bisection_steps: 0,
                constraint_residual: tau - emp0,
                converged: erm.diagnostics.converged,
            },
        });
    }

    let eval = |lambda: f64, warm: &[f64], newton: &mut usize| -> Result<(Vec<f64>, f64)> {
        let p = Problem {
            loss,
            task,
            data,
            weights: None,
            lambda,
            variant,
            ridge: opts.ridge_tiebreak,
        };
        let out = minimize(&p, opts, Some(warm))?;
        *newton += out.newton_iters;
        let emp = empirical_loss(loss, task, data, &out.x)?;
        Ok((out.x, emp))
    };

    // bracket: lambda = 0 is feasible (loss = empirical minimum <= tau);
    // expand the upper end until it is infeasible. The expansion only
    // matters for the augmented norm, whose path reaches zero asymptotically.
    let mut newton = erm.diagnostics.newton_iters;
    let mut lo = 0.0;
    let mut x_lo = erm.x_hat.clone();
    let mut g_lo = erm.min_loss;
    let mut hi = lip * max_u + 1.0;
    let mut warm = erm.x_hat.clone();
    let mut expansions = 0;
    loop {
        let (x_hi, g_hi) = eval(hi, &warm, &mut newton)?;
        warm = x_hi;
        if g_hi > tau {
            break;
        }
        lo = hi;
        x_lo = warm.clone();
        g_lo = g_hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(RsError::Convergence {
                what: "satisficing path upper bracket".to_string(),
                residual: tau - g_lo,
            });
        }
    }

    let gap_tol = 9.0 * opts.constraint_tol * tau.abs().max(1.0);
    let mut steps = expansions;
    while steps < 300 {
        let width_ok = (hi - lo) <= opts.rel_tol * (1.0 + lo);
        let gap_ok = (tau - g_lo) <= gap_tol;
        if (width_ok && gap_ok) || (hi - lo) <= 1e-15 * (1.0 + lo) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (x_mid, g_mid) = eval(mid, &warm, &mut newton)?;
        warm = x_mid.clone();
        if g_mid <= tau {
            lo = mid;
            x_lo = x_mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }

    let width_ok = (hi - lo) <= opts.rel_tol * (1.0 + lo);
    let gap_ok = (tau - g_lo) <= gap_tol;
    let k_tau = lip * variant.value(&x_lo);
    Ok(RsSolution {
        x_hat: x_lo,
        k_tau,
        lambda_hat: lo,
        tau,
        epsilon,
        erm_min_loss: erm.min_loss,
        norm_variant: variant,
        diagnostics: Diagnostics {
            warmup_iters: erm.diagnostics.warmup_iters,
            newton_iters: newton,
            bisection_steps: steps,
            constraint_residual: tau - g_lo,
            converged: width_ok && gap_ok,
        },
    })
}

/// Solves the distributionally robust problem over a Wasserstein ball:
/// min_x mean loss + radius * Lip(L) * R(x), the exact reformulation for
/// Lipschitz losses with transport costs matching the norm variant.
pub fn solve_dro(
    loss: &Loss,
    task: Task,
    data: &Dataset,
    radius: f64,
    variant: NormVariant,
    opts: &SolverOptions,
) -> Result<DroSolution> {
    check_inputs(loss, task, data, opts)?;
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(RsError::param(format!(
            "ball radius must be nonnegative, got {radius}"
        )));
    }
    let lip = loss.lipschitz_required()?;
    if task == Task::Classification && variant == NormVariant::Augmented {
        return Err(RsError::unsupported(
            "the robust reformulation for classification is defined for the feature-only norm"
                .to_string(),
        ));
    }
    let p = Problem {
        loss,
        task,
        data,
        weights: None,
        lambda: radius * lip,
        variant,
        ridge: opts.ridge_tiebreak,
    };
    let out = minimize(&p, opts, None)?;
    let emp = empirical_loss(loss, task, data, &out.x)?;
    let objective = emp + radius * lip * variant.value(&out.x);
    Ok(DroSolution {
        x_hat: out.x,
        radius,
        empirical_loss: emp,
        objective,
        diagnostics: Diagnostics {
            warmup_iters: out.warmup_iters,
            newton_iters: out.newton_iters,
            bisection_steps: 0,
            constraint_residual: 0.0,
            converged: out.converged,
        },
    })
}

// ============================================================================
// Tests
// ============================================================================
