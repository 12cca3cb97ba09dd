//! Worst-case expected losses over transport balls and the fragility of a
//! decision.
//!
//! For a decision x, target tau, and transport cost c, the fragility is the
//! smallest k >= 0 such that every distribution P satisfies
//! E_P[h(x, .)] <= tau + k * W(P, P_hat), where P_hat is the empirical
//! distribution. Equivalently it is the smallest k making the penalized
//! worst case sup_P { E_P[h] - k W(P, P_hat) } fall to tau. That worst case
//! collapses to a pointwise expression
//!
//!   E_{P_hat}[ sup_z { h(x, z) - k c(xi, z) } ]
//!
//! which this module evaluates three ways: in closed form over the whole
//! joint space (finite iff k is at least the loss Lipschitz constant times
//! the decision norm), directly over a finite candidate support, and through
//! an explicit linear program over that support whose optimal basis doubles
//! as a worst-case distribution. The direct and LP routes are kept fully
//! independent so each can check the other.

use std::collections::HashSet;

use crate::distributions::{Dataset, DiscreteDistribution};
use crate::error::{Result, RsError};
use crate::ext::ExtReal;
use crate::linalg::lu_solve;
use crate::losses::{Loss, Task};
use crate::solvers::NormVariant;
use crate::transport::GroundCost;

// ============================================================================
// Evaluation context
// ============================================================================

/// Everything needed to evaluate worst cases over a finite candidate
/// support: the loss and task defining h(x, (u, y)), the transport cost, and
/// the candidate points z the adversary may move mass to.
pub struct RobustEvalContext<'a> {
    loss: &'a Loss,
    task: Task,
    cost: GroundCost,
    support: Vec<Vec<f64>>,
}

impl<'a> RobustEvalContext<'a> {
    pub fn new(
        loss: &'a Loss,
        task: Task,
        cost: GroundCost,
        support: Vec<Vec<f64>>,
    ) -> Result<Self> {
        loss.validate()?;
        if support.is_empty() {
            return Err(RsError::validation("candidate support is empty".to_string()));
        }
        let dim = support[0].len();
        if dim < 2 {
            return Err(RsError::validation(
                "candidate support atoms need features and a label".to_string(),
            ));
        }
        for (i, z) in support.iter().enumerate() {
            if z.len() != dim {
                return Err(RsError::shape(format!(
                    "support atom {} has dimension {}, expected {dim}",
                    i + 1,
                    z.len()
                )));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(RsError::validation(format!(
                    "support atom {} is not finite",
                    i + 1
                )));
            }
        }
        Ok(RobustEvalContext { loss, task, cost, support })
    }

    /// Candidate support consisting of the empirical atoms plus extras.
    pub fn over_support_of(
        loss: &'a Loss,
        task: Task,
        cost: GroundCost,
        empirical: &DiscreteDistribution,
        extra: &[Vec<f64>],
    ) -> Result<Self> {
        let mut support: Vec<Vec<f64>> =
            (0..empirical.len()).map(|i| empirical.atom(i).to_vec()).collect();
        support.extend(extra.iter().cloned());
        Self::new(loss, task, cost, support)
    }

    pub fn cost(&self) -> GroundCost {
        self.cost
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    fn dim(&self) -> usize {
        self.support[0].len()
    }

    /// h(x, z) for a joint candidate atom z = (u, y).
    fn h(&self, x: &[f64], z: &[f64]) -> f64 {
        let d = z.len();
        self.loss.value(self.task.margin(x, &z[..d - 1], z[d - 1]))
    }

    fn check_instance(&self, empirical: &DiscreteDistribution, x: &[f64], k: f64) -> Result<()> {
        if empirical.dim() != self.dim() {
            return Err(RsError::shape(format!(
                "empirical atoms have dimension {}, support {}",
                empirical.dim(),
                self.dim()
            )));
        }
        if x.len() + 1 != self.dim() {
            return Err(RsError::shape(format!(
                "decision has dimension {}, support atoms {}",
                x.len(),
                self.dim()
            )));
        }
        if !(k.is_finite() && k >= 0.0) {
            return Err(RsError::param(format!(
                "penalty slope must be nonnegative, got {k}"
            )));
        }
        // the empirical support must be among the candidates, so that the
        // stay-put option exists for every empirical atom
        let have: HashSet<Vec<u64>> = self
            .support
            .iter()
            .map(|z| z.iter().map(|v| v.to_bits()).collect())
            .collect();
        for i in 0..empirical.len() {
            let key: Vec<u64> = empirical.atom(i).iter().map(|v| v.to_bits()).collect();
            if !have.contains(&key) {
                return Err(RsError::validation(format!(
                    "empirical atom {} is missing from the candidate support",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// h(x, z_j) - k c(xi_i, z_j) as an extended real; with k = 0 the cost
    /// term is dropped entirely (0 * inf = 0), so even infinite-cost moves
    /// are free.
    fn payoff(&self, empirical: &DiscreteDistribution, x: &[f64], k: f64, i: usize, j: usize) -> ExtReal {
        let h = self.h(x, &self.support[j]);
        if k == 0.0 {
            return ExtReal::Finite(h);
        }
        match self.cost.cost(empirical.atom(i), &self.support[j]) {
            ExtReal::Finite(c) => ExtReal::Finite(h - k * c),
            ExtReal::PosInf => ExtReal::PosInf, // marks an excluded move
        }
    }
}

// ============================================================================
// Worst-case objectives
// ============================================================================

/// The penalized worst case over the candidate support, evaluated directly:
/// sum_i p_i max_j { h(x, z_j) - k c(xi_i, z_j) }, with infinite-cost moves
/// excluded (unless k = 0, which ignores cost).
pub fn reformulated_objective(
    ctx: &RobustEvalContext,
    empirical: &DiscreteDistribution,
    x: &[f64],
    k: f64,
) -> Result<ExtReal> {
    ctx.check_instance(empirical, x, k)?;
    let mut total = 0.0;
    for i in 0..empirical.len() {
        let mut best = f64::NEG_INFINITY;
        for j in 0..ctx.support.len() {
            if let ExtReal::Finite(v) = ctx.payoff(empirical, x, k, i, j) {
                if v > best {
                    best = v;
                }
            }
        }
        if best == f64::NEG_INFINITY {
            return Err(RsError::Inconsistent(
                "no admissible move for an empirical atom".to_string(),
            ));
        }
        total += empirical.weight(i) * best;
    }
    Ok(ExtReal::Finite(total))
}

/// The penalized worst case over the whole joint space, in closed form:
/// equal to the empirical loss when k is at least Lip(L) times the decision
/// norm paired with the cost (feature-only pairs with ||x||, the full cost
/// with sqrt(||x||^2 + 1)), and infinite below that threshold.
pub fn closed_form_objective(
    loss: &Loss,
    task: Task,
    cost: GroundCost,
    data: &Dataset,
    x: &[f64],
    k: f64,
) -> Result<ExtReal> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(RsError::param(format!(
            "penalty slope must be nonnegative, got {k}"
        )));
    }
    let lip = loss.lipschitz_required()?;
    let variant = norm_variant_for_cost(cost, task)?;
    let l_h = lip * variant.value(x);
    if k >= l_h {
        Ok(ExtReal::Finite(crate::solvers::empirical_loss(loss, task, data, x)?))
    } else {
        Ok(ExtReal::PosInf)
    }
}

/// The norm of the decision that pairs with a transport cost: feature-only
/// costs control ||x||_2, the full joint cost controls sqrt(||x||^2 + 1).
/// The pairing for classification is defined for feature-only costs.
pub fn norm_variant_for_cost(cost: GroundCost, task: Task) -> Result<NormVariant> {
    match (cost, task) {
        (GroundCost::FeatureOnly, _) => Ok(NormVariant::XOnly),
        (GroundCost::FullL2, Task::Regression) => Ok(NormVariant::Augmented),
        (GroundCost::FullL2, Task::Classification) => Err(RsError::unsupported(
            "the joint-cost worst case for classification has no closed form; use the \
             finite-support evaluators"
                .to_string(),
        )),
    }
}

/// The penalized worst case as an explicit linear program over couplings of
/// the empirical weights with the candidate support, solved by a dense
/// revised simplex. Returns the optimal value and the induced worst-case
/// distribution (the column marginals of the optimal coupling).
pub fn worst_case_lp(
    ctx: &RobustEvalContext,
    empirical: &DiscreteDistribution,
    x: &[f64],
    k: f64,
) -> Result<(ExtReal, DiscreteDistribution)> {
    ctx.check_instance(empirical, x, k)?;
    let n = empirical.len();
    let s = ctx.support.len();

    // admissible columns: (empirical atom, support atom, payoff)
    let mut cols: Vec<(usize, usize, f64)> = Vec::with_capacity(n * s);
    for i in 0..n {
        for j in 0..s {
            if let ExtReal::Finite(v) = ctx.payoff(empirical, x, k, i, j) {
                cols.push((i, j, v));
            }
        }
    }

    // initial feasible basis: each empirical atom stays where it is
    let support_index: std::collections::HashMap<Vec<u64>, usize> = ctx
        .support
        .iter()
        .enumerate()
        .map(|(j, z)| (z.iter().map(|v| v.to_bits()).collect(), j))
        .collect();
    let mut basis = Vec::with_capacity(n);
    for i in 0..n {
        let key: Vec<u64> = empirical.atom(i).iter().map(|v| v.to_bits()).collect();
        let j = support_index[&key];
        let c = cols
            .iter()
            .position(|&(ci, cj, _)| ci == i && cj == j)
            .ok_or_else(|| RsError::Inconsistent("stay-put column is missing".to_string()))?;
        basis.push(c);
    }

    let value = simplex_max(&cols, empirical.weights(), &mut basis, n)?;

    // the optimal coupling concentrates each row's mass on its basic column
    let mut col_mass = vec![0.0; s];
    for &c in basis.iter() {
        let (i, j, _) = cols[c];
        col_mass[j] += empirical.weight(i);
    }
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (j, &w) in col_mass.iter().enumerate() {
        if w > 0.0 {
            atoms.push(ctx.support[j].clone());
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(RsError::Inconsistent(format!(
            "worst-case masses sum to {total}"
        )));
    }
    let last = weights.len() - 1;
    weights[last] += 1.0 - total;
    let dist = DiscreteDistribution::new(atoms, weights)?;
    Ok((ExtReal::Finite(value), dist))
}

/// Dense revised simplex for max c'v subject to A v = b, v >= 0, where
/// column t of A is the indicator of constraint row `cols[t].0`. The basis
/// matrix is refactored with LU at every pivot; entering columns follow
/// largest reduced cost with a switch to Bland's rule beyond a burn-in.
fn simplex_max(
    cols: &[(usize, usize, f64)],
    b: &[f64],
    basis: &mut Vec<usize>,
    n: usize,
) -> Result<f64> {
    let col_pattern = |t: usize, out: &mut [f64]| {
        out.fill(0.0);
        out[cols[t].0] = 1.0;
    };
    let mut in_basis = vec![false; cols.len()];
    for &c in basis.iter() {
        in_basis[c] = true;
    }
    // basic solution: x_B = B^{-1} b
    let mut bmat = vec![0.0; n * n];
    let mut xb = b.to_vec();
    let refactor = |basis: &[usize], rhs: &[f64], bmat: &mut [f64], out: &mut Vec<f64>| -> Result<()> {
        bmat.fill(0.0);
        let mut col = vec![0.0; n];
        for (pos, &c) in basis.iter().enumerate() {
            col_pattern(c, &mut col);
            for r in 0..n {
                bmat[r * n + pos] = col[r];
            }
        }
        out.clear();
        out.extend_from_slice(rhs);
        if !lu_solve(bmat, n, out) {
            return Err(RsError::Inconsistent("singular simplex basis".to_string()));
        }
        Ok(())
    };
    refactor(basis, b, &mut bmat, &mut xb)?;

    let cmax = cols.iter().map(|&(_, _, c)| c.abs()).fold(0.0, f64::max);
    let tol = 1e-11 * (1.0 + cmax);
    let max_iters = 1000 + 20 * cols.len();
    let bland_after = max_iters / 2;
    for iter in 0..=max_iters {
        // duals: y' B = c_B'  <=>  B' y = c_B
        let mut bt = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for (pos, &c) in basis.iter().enumerate() {
            col_pattern(c, &mut col);
            for r in 0..n {
                bt[pos * n + r] = col[r];
            }
        }
        let mut y: Vec<f64> = basis.iter().map(|&c| cols[c].2).collect();
        if !lu_solve(&mut bt, n, &mut y) {
            return Err(RsError::Inconsistent("singular simplex basis".to_string()));
        }

        // entering column
        let mut enter = None;
        let mut best = tol;
        for (t, &(i, _, c)) in cols.iter().enumerate() {
            if in_basis[t] {
                continue;
            }
            let r = c - y[i];
            if iter >= bland_after {
                if r > tol {
                    enter = Some(t);
                    break;
                }
            } else if r > best {
                best = r;
                enter = Some(t);
            }
        }
        let Some(e) = enter else {
            break;
        };
        if iter == max_iters {
            return Err(RsError::Convergence {
                what: "worst-case simplex iteration cap".to_string(),
                residual: best,
            });
        }

        // direction: B d = a_e
        let mut a_e = vec![0.0; n];
        col_pattern(e, &mut a_e);
        let mut bcopy = vec![0.0; n * n];
        for (pos, &c) in basis.iter().enumerate() {
            col_pattern(c, &mut col);
            for r in 0..n {
                bcopy[r * n + pos] = col[r];
            }
        }
        let mut d = a_e;
        if !lu_solve(&mut bcopy, n, &mut d) {
            return Err(RsError::Inconsistent("singular simplex basis".to_string()));
        }

        // ratio test (Bland tie-break on the leaving column index)
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &dp) in d.iter().enumerate() {
            if dp > 1e-12 {
                let ratio = xb[pos] / dp;
                if ratio < theta - 1e-15
                    || (ratio <= theta + 1e-15
                        && leave != usize::MAX
                        && basis[pos] < basis[leave])
                {
                    theta = ratio;
                    leave = pos;
                }
            }
        }
        if leave == usize::MAX {
            return Err(RsError::Inconsistent("unbounded worst-case program".to_string()));
        }
        in_basis[basis[leave]] = false;
        basis[leave] = e;
        in_basis[e] = true;
        refactor(basis, b, &mut bmat, &mut xb)?;
    }

    Ok(basis.iter().zip(xb.iter()).map(|(&c, &v)| cols[c].2 * v).sum())
}

// ============================================================================
// Fragility
// ============================================================================

/// Fragility of a decision against a finite candidate support: the smallest
/// k >= 0 at which the penalized worst case over the support falls to tau,
/// found by bisection to absolute tolerance `tol`. Infinite when even the
/// empirical loss exceeds tau.
pub fn fragility(
    ctx: &RobustEvalContext,
    empirical: &DiscreteDistribution,
    x: &[f64],
    tau: f64,
    tol: f64,
) -> Result<ExtReal> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(RsError::param(format!("tolerance must be positive, got {tol}")));
    }
    if !tau.is_finite() {
        return Err(RsError::param("tau must be finite".to_string()));
    }
    let eval = |k: f64| -> Result<f64> {
        Ok(reformulated_objective(ctx, empirical, x, k)?.expect_finite())
    };
    // the large-k limit is the empirical loss itself: every atom stays put
    let d = empirical.dim();
    let emp = empirical.expect(|z| {
        ctx.loss
            .value(ctx.task.margin(x, &z[..d - 1], z[d - 1]))
    });
    if emp > tau {
        return Ok(ExtReal::PosInf);
    }
    if eval(0.0)? <= tau {
        return Ok(ExtReal::Finite(0.0));
    }
    // initial bracket from the closed-form threshold; expand if the finite
    // support needs a steeper slope (possible when tau sits between the
    // empirical loss and the worst case at the threshold)
    let lip = ctx.loss.lipschitz_required()?;
    let normv = match norm_variant_for_cost(ctx.cost, ctx.task) {
        Ok(v) => v.value(x),
        Err(_) => crate::linalg::norm2(x) + 1.0,
    };
    let mut hi = lip * (normv + 1.0) + 1.0;
    let mut expansions = 0;
    while eval(hi)? > tau {
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(RsError::Convergence {
                what: "fragility upper bracket".to_string(),
                residual: eval(hi)? - tau,
            });
        }
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? <= tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ExtReal::Finite(hi))
}

/// Fragility in closed form over the whole joint space: Lip(L) times the
/// paired norm of x when the empirical loss meets tau, infinite otherwise.
pub fn fragility_closed_form(
    loss: &Loss,
    task: Task,
    cost: GroundCost,
    data: &Dataset,
    x: &[f64],
    tau: f64,
) -> Result<ExtReal> {
    if !tau.is_finite() {
        return Err(RsError::param("tau must be finite".to_string()));
    }
    let lip = loss.lipschitz_required()?;
    let variant = norm_variant_for_cost(cost, task)?;
    let emp = crate::solvers::empirical_loss(loss, task, data, x)?;
    if emp <= tau {
        Ok(ExtReal::Finite(lip * variant.value(x)))
    } else {
        Ok(ExtReal::PosInf)
    }
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SyntheticConfig;
    use crate::rng;
    use crate::transport::wasserstein;
    use rand::Rng;

    fn small_instance(
        n: usize,
        extra: usize,
        seed: u64,
    ) -> (DiscreteDistribution, Vec<Vec<f64>>, Vec<f64>) {
        let cfg = SyntheticConfig::default();
        let mut r = rng::substream(seed, rng::Purpose::Train, 0);
        let data = cfg.sample_dataset(n, &mut r).unwrap();
        let emp = DiscreteDistribution::from_dataset(&data);
        let mut extras = Vec::new();
        for _ in 0..extra {
            extras.push(vec![
                r.gen_range(-2.0..2.0),
                r.gen_range(-2.0..2.0),
                r.gen_range(-3.0..3.0),
            ]);
        }
        let x = vec![r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
        (emp, extras, x)
    }

    #[test]
    fn zero_slope_picks_the_worst_support_point() {
        let emp = DiscreteDistribution::new(
            vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 2.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let support = vec![
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 2.0],
            vec![3.0, 0.0, 10.0],
        ];
        let ctx =
            RobustEvalContext::new(&Loss::L1, Task::Regression, GroundCost::FullL2, support)
                .unwrap();
        let x = [1.0, 1.0];
        // h at the three candidates: |1-1|=0, |2-1|=1, |10-3|=7
        let v = reformulated_objective(&ctx, &emp, &x, 0.0).unwrap().expect_finite();
        assert!((v - 7.0).abs() < 1e-12);
        // and the LP agrees, with all mass pushed to the worst atom
        let (lv, dist) = worst_case_lp(&ctx, &emp, &x, 0.0).unwrap();
        assert!((lv.expect_finite() - 7.0).abs() < 1e-9);
        assert_eq!(dist.len(), 1);
        assert_eq!(dist.atom(0), &[3.0, 0.0, 10.0]);
    }

    #[test]
    fn large_slope_keeps_mass_at_home() {
        let (emp, extras, x) = small_instance(8, 6, 201);
        let ctx = RobustEvalContext::over_support_of(
            &Loss::L1,
            Task::Regression,
            GroundCost::FullL2,
            &emp,
            &extras,
        )
        .unwrap();
        let d = emp.dim();
        let emp_loss = emp.expect(|z| Loss::L1.value(Task::Regression.margin(&x, &z[..d - 1], z[d - 1])));
        // far above the Lipschitz threshold every move is unprofitable
        let k = (crate::linalg::norm2(&x) + 1.0) * 4.0;
        let v = reformulated_objective(&ctx, &emp, &x, k).unwrap().expect_finite();
        assert!((v - emp_loss).abs() < 1e-12, "{v} vs {emp_loss}");
    }

    #[test]
    fn closed_form_switches_at_the_lipschitz_threshold() {
        let cfg = SyntheticConfig::default();
        let mut r = rng::substream(203, rng::Purpose::Train, 0);
        let data = cfg.sample_dataset(12, &mut r).unwrap();
        let x = [0.7, -1.3];
        // feature-only cost pairs with ||x||
        let l_h = crate::linalg::norm2(&x);
        let below =
            closed_form_objective(&Loss::L1, Task::Regression, GroundCost::FeatureOnly, &data, &x, 0.9 * l_h)
                .unwrap();
        assert!(below.is_infinite());
        let at = closed_form_objective(&Loss::L1, Task::Regression, GroundCost::FeatureOnly, &data, &x, 1.1 * l_h)
            .unwrap();
        let emp = crate::solvers::empirical_loss(&Loss::L1, Task::Regression, &data, &x).unwrap();
        assert!((at.expect_finite() - emp).abs() < 1e-12);
        // the full cost pairs with the augmented norm
        let l_aug = (crate::linalg::dot(&x, &x) + 1.0).sqrt();
        let aug_below =
            closed_form_objective(&Loss::L1, Task::Regression, GroundCost::FullL2, &data, &x, 0.99 * l_aug)
                .unwrap();
        assert!(aug_below.is_infinite());
        let aug_at =
            closed_form_objective(&Loss::L1, Task::Regression, GroundCost::FullL2, &data, &x, l_aug)
                .unwrap();
        assert!((aug_at.expect_finite() - emp).abs() < 1e-12);
    }

    #[test]
    fn direct_and_lp_routes_agree_on_random_instances() {
        let mut seeds = 0;
        for case in 0..50 {
            seeds += 1;
            let (emp, extras, x) = small_instance(6 + case % 5, 4 + case % 7, 300 + seeds);
            for cost in [GroundCost::FullL2, GroundCost::FeatureOnly] {
                let ctx = RobustEvalContext::over_support_of(
                    &Loss::Huber { delta: 0.8 },
                    Task::Regression,
                    cost,
                    &emp,
                    &extras,
                )
                .unwrap();
                for k in [0.0, 0.3, 1.0, 3.0] {
                    let a = reformulated_objective(&ctx, &emp, &x, k).unwrap().expect_finite();
                    let (b, dist) = worst_case_lp(&ctx, &emp, &x, k).unwrap();
                    let b = b.expect_finite();
                    assert!(
                        (a - b).abs() <= 1e-7,
                        "case {case} cost {cost:?} k {k}: direct {a} vs lp {b}"
                    );
                    let total: f64 = dist.weights().iter().sum();
                    assert!((total - 1.0).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn worst_case_distribution_attains_the_value_at_zero_slope() {
        let (emp, extras, x) = small_instance(10, 8, 400);
        let ctx = RobustEvalContext::over_support_of(
            &Loss::L1,
            Task::Regression,
            GroundCost::FullL2,
            &emp,
            &extras,
        )
        .unwrap();
        let (v, dist) = worst_case_lp(&ctx, &emp, &x, 0.0).unwrap();
        let d = dist.dim();
        let mean_h =
            dist.expect(|z| Loss::L1.value(Task::Regression.margin(&x, &z[..d - 1], z[d - 1])));
        assert!((mean_h - v.expect_finite()).abs() < 1e-9);
    }

    #[test]
    fn fragility_bisection_produces_a_tight_certificate() {
        let (emp, extras, x) = small_instance(10, 10, 500);
        let ctx = RobustEvalContext::over_support_of(
            &Loss::L1,
            Task::Regression,
            GroundCost::FullL2,
            &emp,
            &extras,
        )
        .unwrap();
        let d = emp.dim();
        let emp_loss =
            emp.expect(|z| Loss::L1.value(Task::Regression.margin(&x, &z[..d - 1], z[d - 1])));
        let tau = 1.3 * emp_loss;
        let k = fragility(&ctx, &emp, &x, tau, 1e-8).unwrap().expect_finite();
        // at k the worst case meets tau; a slope visibly below k does not
        let at = reformulated_objective(&ctx, &emp, &x, k).unwrap().expect_finite();
        assert!(at <= tau + 1e-6, "worst case {at} above tau {tau}");
        if k > 1e-3 {
            let below = reformulated_objective(&ctx, &emp, &x, k - 1e-3)
                .unwrap()
                .expect_finite();
            assert!(below > tau, "k is not minimal: {below} <= {tau}");
        }
    }

    #[test]
    fn fragility_is_infinite_beyond_the_empirical_loss() {
        let (emp, extras, x) = small_instance(8, 4, 600);
        let ctx = RobustEvalContext::over_support_of(
            &Loss::L1,
            Task::Regression,
            GroundCost::FullL2,
            &emp,
            &extras,
        )
        .unwrap();
        let d = emp.dim();
        let emp_loss =
            emp.expect(|z| Loss::L1.value(Task::Regression.margin(&x, &z[..d - 1], z[d - 1])));
        let k = fragility(&ctx, &emp, &x, 0.9 * emp_loss, 1e-8).unwrap();
        assert!(k.is_infinite());
        // the closed form agrees on both sides of the threshold
        let cfg = SyntheticConfig::default();
        let mut r = rng::substream(601, rng::Purpose::Train, 0);
        let data = cfg.sample_dataset(8, &mut r).unwrap();
        let emp2 = crate::solvers::empirical_loss(&Loss::L1, Task::Regression, &data, &x).unwrap();
        let inf = fragility_closed_form(&Loss::L1, Task::Regression, GroundCost::FeatureOnly, &data, &x, 0.9 * emp2)
            .unwrap();
        assert!(inf.is_infinite());
        let fin = fragility_closed_form(&Loss::L1, Task::Regression, GroundCost::FeatureOnly, &data, &x, 1.1 * emp2)
            .unwrap();
        assert!((fin.expect_finite() - crate::linalg::norm2(&x)).abs() < 1e-12);
    }

    #[test]
    fn finite_support_fragility_never_exceeds_the_closed_form() {
        // the support-restricted adversary is weaker, so its fragility is
        // at most the Lipschitz threshold
        for seed in 0..10 {
            let (emp, extras, x) = small_instance(8, 8, 700 + seed);
            let ctx = RobustEvalContext::over_support_of(
                &Loss::L1,
                Task::Regression,
                GroundCost::FeatureOnly,
                &emp,
                &extras,
            )
            .unwrap();
            let d = emp.dim();
            let emp_loss =
                emp.expect(|z| Loss::L1.value(Task::Regression.margin(&x, &z[..d - 1], z[d - 1])));
            let tau = 1.2 * emp_loss;
            let k = fragility(&ctx, &emp, &x, tau, 1e-8).unwrap().expect_finite();
            let l_h = crate::linalg::norm2(&x);
            assert!(k <= l_h + 1e-8, "fragility {k} above threshold {l_h}");
        }
    }

    #[test]
    fn penalized_value_bounds_every_reachable_distribution() {
        // for any distribution Q on the candidate support,
        // E_Q[h] <= value(k) + k W(Q, empirical)
        let (emp, extras, x) = small_instance(6, 6, 800);
        let ctx = RobustEvalContext::over_support_of(
            &Loss::L1,
            Task::Regression,
            GroundCost::FullL2,
            &emp,
            &extras,
        )
        .unwrap();
        let k = 0.8;
        let v = reformulated_objective(&ctx, &emp, &x, k).unwrap().expect_finite();
        let mut r = rng::root(801);
        let atoms: Vec<Vec<f64>> = (0..ctx.support_len()).map(|j| ctx.support[j].clone()).collect();
        for _ in 0..100 {
            let raw: Vec<f64> = (0..atoms.len()).map(|_| r.gen_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|a| a / total).collect();
            let fix: f64 = 1.0 - w.iter().sum::<f64>();
            w[0] += fix;
            let q = DiscreteDistribution::new(atoms.clone(), w).unwrap();
            let (dist, _) = wasserstein(&q, &emp, GroundCost::FullL2).unwrap();
            let d = q.dim();
            let eh = q.expect(|z| Loss::L1.value(Task::Regression.margin(&x, &z[..d - 1], z[d - 1])));
            assert!(
                eh <= v + k * dist.expect_finite() + 1e-6,
                "bound violated: {eh} vs {v} + {k} * {}",
                dist.expect_finite()
            );
        }
    }

    #[test]
    fn missing_empirical_atom_is_rejected() {
        let emp = DiscreteDistribution::new(
            vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 2.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let support = vec![vec![1.0, 0.0, 1.0], vec![5.0, 5.0, 5.0]];
        let ctx =
            RobustEvalContext::new(&Loss::L1, Task::Regression, GroundCost::FullL2, support)
                .unwrap();
        let x = [0.0, 0.0];
        assert!(reformulated_objective(&ctx, &emp, &x, 1.0).is_err());
        assert!(worst_case_lp(&ctx, &emp, &x, 1.0).is_err());
    }

    #[test]
    fn classification_feature_only_worst_case_works() {
        let data = Dataset::from_rows(
            vec![vec![1.0, 0.2], vec![-0.8, 0.1], vec![0.9, -0.4]],
            vec![1.0, -1.0, 1.0],
        )
        .unwrap();
        let emp = DiscreteDistribution::from_dataset(&data);
        let extras = vec![vec![0.0, 0.0, 1.0], vec![0.5, 0.5, -1.0]];
        let ctx = RobustEvalContext::over_support_of(
            &Loss::Hinge,
            Task::Classification,
            GroundCost::FeatureOnly,
            &emp,
            &extras,
        )
        .unwrap();
        let x = [1.0, -0.5];
        let a = reformulated_objective(&ctx, &emp, &x, 0.7).unwrap().expect_finite();
        let (b, _) = worst_case_lp(&ctx, &emp, &x, 0.7).unwrap();
        assert!((a - b.expect_finite()).abs() < 1e-9);
        // closed form is undefined for the joint cost with labels
        assert!(norm_variant_for_cost(GroundCost::FullL2, Task::Classification).is_err());
    }
}
