//! Exact optimal transport between finite discrete distributions.
//!
//! Distances are computed with the transportation simplex (network simplex on
//! the dense bipartite transport polytope) and certified by the dual
//! potentials it produces. Two ground costs are supported on joint points
//! (u, y): the full Euclidean distance on (u, y), and a feature-only cost
//! that charges the Euclidean distance on u when labels agree and an
//! infinite cost when they differ, which makes the distance infinite unless
//! the per-label masses match.

use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteDistribution;
use crate::error::{Result, RsError};
use crate::ext::ExtReal;

// ============================================================================
// Ground costs
// ============================================================================

/// Ground cost between joint atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundCost {
    /// Euclidean distance on the whole joint vector (u, y).
    FullL2,
    /// Euclidean distance on u when the labels agree, infinite otherwise.
    FeatureOnly,
}

impl GroundCost {
    /// c(a, b) for joint atoms of equal dimension.
    pub fn cost(&self, a: &[f64], b: &[f64]) -> ExtReal {
        debug_assert_eq!(a.len(), b.len());
        match self {
            GroundCost::FullL2 => ExtReal::Finite(euclidean(a, b)),
            GroundCost::FeatureOnly => {
                let d = a.len();
                if a[d - 1] == b[d - 1] {
                    ExtReal::Finite(euclidean(&a[..d - 1], &b[..d - 1]))
                } else {
                    ExtReal::PosInf
                }
            }
        }
    }

    /// Whether the cost can be infinite between atoms of matching dimension.
    pub fn label_sensitive(&self) -> bool {
        matches!(self, GroundCost::FeatureOnly)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

// ============================================================================
// Transport plans
// ============================================================================

/// An optimal coupling between two discrete distributions, together with the
/// dual potentials certifying optimality: potentials satisfy
/// u_i + v_j <= c(a_i, b_j) everywhere and the dual value sum_i p_i u_i +
/// sum_j q_j v_j equals the transport cost.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    /// (source atom, target atom, mass) triples with positive mass.
    pub flows: Vec<(usize, usize, f64)>,
    /// Dual potential per source atom.
    pub row_potentials: Vec<f64>,
    /// Dual potential per target atom.
    pub col_potentials: Vec<f64>,
}

impl TransportPlan {
    fn empty() -> Self {
        TransportPlan { flows: Vec::new(), row_potentials: Vec::new(), col_potentials: Vec::new() }
    }

    /// Mass leaving each source atom.
    pub fn row_marginals(&self, n: usize) -> Vec<f64> {
        let mut m = vec![0.0; n];
        for &(i, _, f) in &self.flows {
            m[i] += f;
        }
        m
    }

    /// Mass arriving at each target atom.
    pub fn col_marginals(&self, m_atoms: usize) -> Vec<f64> {
        let mut m = vec![0.0; m_atoms];
        for &(_, j, f) in &self.flows {
            m[j] += f;
        }
        m
    }

    /// Recomputes the plan's cost against the given distributions.
    pub fn total_cost(
        &self,
        p: &DiscreteDistribution,
        q: &DiscreteDistribution,
        cost: GroundCost,
    ) -> ExtReal {
        let mut acc = ExtReal::Finite(0.0);
        for &(i, j, f) in &self.flows {
            acc = acc.add(cost.cost(p.atom(i), q.atom(j)).scale(f));
        }
        acc
    }
}

// ============================================================================
// Wasserstein distance
// ============================================================================

/// Exact type-1 Wasserstein distance between two finite distributions under
/// the given ground cost, with an optimal plan. A feature-only cost whose
/// per-label masses disagree by more than 1e-12 yields an infinite distance
/// and an empty plan.
pub fn wasserstein(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    cost: GroundCost,
) -> Result<(ExtReal, TransportPlan)> {
    if p.dim() != q.dim() {
        return Err(RsError::shape(format!(
            "distributions have dimensions {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    if cost.label_sensitive() && p.dim() < 2 {
        return Err(RsError::unsupported(
            "feature-only cost needs joint atoms with a label coordinate".to_string(),
        ));
    }
    match cost {
        GroundCost::FullL2 => {
            let out = transport_simplex(p.weights(), q.weights(), |i, j| {
                euclidean(p.atom(i), q.atom(j))
            })?;
            Ok((
                ExtReal::Finite(out.value),
                TransportPlan {
                    flows: out.flows,
                    row_potentials: out.row_duals,
                    col_potentials: out.col_duals,
                },
            ))
        }
        GroundCost::FeatureOnly => wasserstein_feature_only(p, q),
    }
}

fn wasserstein_feature_only(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<(ExtReal, TransportPlan)> {
    // group atoms by exact label value
    let mut groups: std::collections::BTreeMap<u64, (Vec<usize>, Vec<usize>)> =
        std::collections::BTreeMap::new();
    let d = p.dim();
    for i in 0..p.len() {
        groups.entry(p.atom(i)[d - 1].to_bits()).or_default().0.push(i);
    }
    for j in 0..q.len() {
        groups.entry(q.atom(j)[d - 1].to_bits()).or_default().1.push(j);
    }
    // a label's mass must match on both sides, or no feasible coupling exists
    for (rows, cols) in groups.values() {
        let pm: f64 = rows.iter().map(|&i| p.weight(i)).sum();
        let qm: f64 = cols.iter().map(|&j| q.weight(j)).sum();
        if (pm - qm).abs() > 1e-12 {
            return Ok((ExtReal::PosInf, TransportPlan::empty()));
        }
    }
    let mut value = 0.0;
    let mut plan = TransportPlan {
        flows: Vec::new(),
        row_potentials: vec![0.0; p.len()],
        col_potentials: vec![0.0; q.len()],
    };
    for (rows, cols) in groups.values() {
        let pm: f64 = rows.iter().map(|&i| p.weight(i)).sum();
        if pm <= 0.0 {
            continue;
        }
        let supply: Vec<f64> = rows.iter().map(|&i| p.weight(i)).collect();
        let demand: Vec<f64> = cols.iter().map(|&j| q.weight(j)).collect();
        let out = transport_simplex(&supply, &demand, |a, b| {
            euclidean(&p.atom(rows[a])[..d - 1], &q.atom(cols[b])[..d - 1])
        })?;
        value += out.value;
        for (a, b, f) in out.flows {
            plan.flows.push((rows[a], cols[b], f));
        }
        for (a, &u) in out.row_duals.iter().enumerate() {
            plan.row_potentials[rows[a]] = u;
        }
        for (b, &v) in out.col_duals.iter().enumerate() {
            plan.col_potentials[cols[b]] = v;
        }
    }
    plan.flows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    Ok((ExtReal::Finite(value), plan))
}

/// Exact Wasserstein distance between one-dimensional distributions by
/// quantile coupling: sort both supports and match mass in order. Serves as
/// an independent check of the simplex solver.
pub fn wasserstein_1d(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.dim() != 1 || q.dim() != 1 {
        return Err(RsError::shape(
            "quantile coupling applies to one-dimensional distributions".to_string(),
        ));
    }
    let mut ps: Vec<(f64, f64)> = (0..p.len()).map(|i| (p.atom(i)[0], p.weight(i))).collect();
    let mut qs: Vec<(f64, f64)> = (0..q.len()).map(|j| (q.atom(j)[0], q.weight(j))).collect();
    ps.sort_by(|a, b| a.0.total_cmp(&b.0));
    qs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut i, mut j) = (0usize, 0usize);
    let mut dist = 0.0;
    let mut ri = ps.first().map_or(0.0, |t| t.1);
    let mut rj = qs.first().map_or(0.0, |t| t.1);
    while i < ps.len() && j < qs.len() {
        let take = ri.min(rj);
        dist += take * (ps[i].0 - qs[j].0).abs();
        ri -= take;
        rj -= take;
        if ri <= 1e-15 {
            i += 1;
            if i < ps.len() {
                ri = ps[i].1;
            }
        }
        if rj <= 1e-15 {
            j += 1;
            if j < qs.len() {
                rj = qs[j].1;
            }
        }
    }
    Ok(dist)
}

// ============================================================================
// Transportation simplex
// ============================================================================

struct SimplexOut {
    value: f64,
    flows: Vec<(usize, usize, f64)>,
    row_duals: Vec<f64>,
    col_duals: Vec<f64>,
}

/// Solves min sum_ij c_ij f_ij over couplings of (supply, demand) with the
/// transportation simplex. Degenerate pivots keep a spanning-tree basis of
/// exactly n + m - 1 cells; entering cells take the most negative reduced
/// cost with a switch to Bland's rule after a burn-in to rule out cycling.
fn transport_simplex(
    supply: &[f64],
    demand: &[f64],
    cost_at: impl Fn(usize, usize) -> f64,
) -> Result<SimplexOut> {
    let n = supply.len();
    let m = demand.len();
    if n == 0 || m == 0 {
        return Err(RsError::validation("transport with empty marginals".to_string()));
    }
    // dense cost matrix
    let mut cost = vec![0.0; n * m];
    let mut cmax: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            let c = cost_at(i, j);
            if !c.is_finite() {
                return Err(RsError::validation("non-finite transport cost".to_string()));
            }
            cost[i * m + j] = c;
            cmax = cmax.max(c.abs());
        }
    }
    let tol = 1e-11 * (1.0 + cmax);

    // northwest-corner start: advance exactly one index per step so the
    // basis is always a staircase spanning tree of n + m - 1 cells
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(n + m - 1);
    let mut in_basis = vec![false; n * m];
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let f = s[i].min(d[j]).max(0.0);
        basis.push((i, j, f));
        in_basis[i * m + j] = true;
        s[i] -= f;
        d[j] -= f;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if (s[i] <= d[j] && i < n - 1) || j == m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }

    let mut row_duals = vec![0.0; n];
    let mut col_duals = vec![0.0; m];
    let max_iters = 2000 + 50 * (n + m) * (n + m);
    let bland_after = max_iters / 2;
    for iter in 0..=max_iters {
        compute_duals(&basis, n, m, &cost, &mut row_duals, &mut col_duals)?;

        // entering cell
        let mut enter: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for a in 0..n {
            for b in 0..m {
                if in_basis[a * m + b] {
                    continue;
                }
                let r = cost[a * m + b] - row_duals[a] - col_duals[b];
                if iter >= bland_after {
                    if r < -tol {
                        enter = Some((a, b));
                        break 'scan;
                    }
                } else if r < best {
                    best = r;
                    enter = Some((a, b));
                }
            }
        }
        let Some((ei, ej)) = enter else {
            break;
        };
        if iter == max_iters {
            return Err(RsError::Convergence {
                what: "transportation simplex iteration cap".to_string(),
                residual: -best,
            });
        }

        // cycle: tree path from row ei to col ej, then the entering edge
        let path = tree_path(&basis, n, m, ei, ej)?;
        // edges along the path alternate -, +, -, ... starting at the row end
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let (bi, bj, f) = basis[e];
                if f < theta - 1e-18 || (f <= theta && leave != usize::MAX && {
                    let (li, lj, _) = basis[leave];
                    (bi, bj) < (li, lj)
                }) {
                    theta = f;
                    leave = e;
                }
            }
        }
        if leave == usize::MAX {
            return Err(RsError::Inconsistent("transport cycle without minus edges".to_string()));
        }
        let theta = theta.max(0.0);
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[e].2 = (basis[e].2 - theta).max(0.0);
            } else {
                basis[e].2 += theta;
            }
        }
        let (li, lj, _) = basis[leave];
        in_basis[li * m + lj] = false;
        basis[leave] = (ei, ej, theta);
        in_basis[ei * m + ej] = true;
    }

    let mut value = 0.0;
    let mut flows = Vec::new();
    for &(a, b, f) in &basis {
        if f > 0.0 {
            value += f * cost[a * m + b];
            flows.push((a, b, f));
        }
    }
    flows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    Ok(SimplexOut { value, flows, row_duals, col_duals })
}

/// Dual potentials from the basis tree: fix u_0 = 0 and propagate
/// u_i + v_j = c_ij across basic cells.
fn compute_duals(
    basis: &[(usize, usize, f64)],
    n: usize,
    m: usize,
    cost: &[f64],
    u: &mut [f64],
    v: &mut [f64],
) -> Result<()> {
    let mut row_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut col_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (e, &(i, j, _)) in basis.iter().enumerate() {
        row_adj[i].push(e);
        col_adj[j].push(e);
    }
    let mut row_set = vec![false; n];
    let mut col_set = vec![false; m];
    u[0] = 0.0;
    row_set[0] = true;
    // nodes are encoded as row index or n + col index
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(node) = queue.pop_front() {
        if node < n {
            for &e in &row_adj[node] {
                let (i, j, _) = basis[e];
                if !col_set[j] {
                    v[j] = cost[i * m + j] - u[i];
                    col_set[j] = true;
                    queue.push_back(n + j);
                }
            }
        } else {
            let jc = node - n;
            for &e in &col_adj[jc] {
                let (i, j, _) = basis[e];
                if !row_set[i] {
                    u[i] = cost[i * m + j] - v[j];
                    row_set[i] = true;
                    queue.push_back(i);
                }
            }
        }
    }
    if row_set.iter().any(|&s| !s) || col_set.iter().any(|&s| !s) {
        return Err(RsError::Inconsistent("transport basis is not a spanning tree".to_string()));
    }
    Ok(())
}

/// Path of basis-edge indices from row node `from_row` to col node `to_col`
/// in the basis tree, ordered from the row end.
fn tree_path(
    basis: &[(usize, usize, f64)],
    n: usize,
    m: usize,
    from_row: usize,
    to_col: usize,
) -> Result<Vec<usize>> {
    let mut row_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut col_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (e, &(i, j, _)) in basis.iter().enumerate() {
        row_adj[i].push(e);
        col_adj[j].push(e);
    }
    // BFS over nodes (rows 0..n, cols n..n+m) remembering the arriving edge
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n + m];
    let mut seen = vec![false; n + m];
    seen[from_row] = true;
    let mut queue = std::collections::VecDeque::from([from_row]);
    while let Some(node) = queue.pop_front() {
        if node == n + to_col {
            break;
        }
        let edges = if node < n { &row_adj[node] } else { &col_adj[node - n] };
        for &e in edges {
            let (i, j, _) = basis[e];
            let other = if node < n { n + j } else { i };
            if !seen[other] {
                seen[other] = true;
                prev[other] = Some((node, e));
                queue.push_back(other);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = n + to_col;
    while node != from_row {
        let Some((parent, e)) = prev[node] else {
            return Err(RsError::Inconsistent("transport basis path not found".to_string()));
        };
        path.push(e);
        node = parent;
    }
    path.reverse();
    Ok(path)
}

// ============================================================================
// Tests
// ============================================================================
