//! End-to-end acceptance checks, one test per criterion. Each test prints
//! the measured quantities behind its verdict, so a failure line carries
//! the full diagnosis. Tests share a lock because several assert wall-clock
//! budgets that only hold when nothing else competes for the core.

use std::sync::Mutex;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use rskit::distributions::{DiscreteDistribution, SyntheticConfig};
use rskit::experiments::{run_scenario, ExperimentConfig, Scenario, SweepResult};
use rskit::inference::{remainder, BetaSchedule, RemainderSchedule};
use rskit::robust::{
    fragility, norm_variant_for_cost, reformulated_objective, worst_case_lp, RobustEvalContext,
};
use rskit::solvers::{solve_dro, solve_rs, NormVariant, SolverOptions};
use rskit::transport::{wasserstein, wasserstein_1d, GroundCost};
use rskit::{ExtReal, Loss, Task};

static GATE: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_joint(rng: &mut ChaCha8Rng, dim: usize, min_atoms: usize, max_atoms: usize) -> DiscreteDistribution {
    let n = rng.gen_range(min_atoms..=max_atoms);
    let atoms: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    DiscreteDistribution::new(atoms, weights).expect("valid atoms and weights")
}

/// Grid means for one method of a sweep, in grid order.
fn curve(result: &SweepResult, method: &str) -> Vec<(f64, f64)> {
    result
        .method_rows(method)
        .iter()
        .map(|r| (r.grid_value, r.metric_mean))
        .collect()
}

fn mean_at(result: &SweepResult, grid: f64, method: &str) -> f64 {
    result
        .rows
        .iter()
        .find(|r| r.grid_value == grid && r.method == method)
        .unwrap_or_else(|| panic!("no row for {method} at {grid}"))
        .metric_mean
}

// ============================================================================
// 1. Worst-case evaluation: direct maximum versus transport program
// ============================================================================

#[test]
fn criterion_01_direct_and_lp_worst_case_agree_on_200_instances() {
    let _g = serial();
    let start = Instant::now();
    let mut r = rng(4001);
    let loss = Loss::L1;
    for case in 0..200 {
        let cost = if case % 2 == 0 { GroundCost::FeatureOnly } else { GroundCost::FullL2 };
        // Joint atoms carry 2 feature coordinates plus a label.
        let empirical = random_joint(&mut r, 3, 5, 20);
        let extra: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| r.gen_range(-2.5..2.5)).collect())
            .collect();
        let ctx =
            RobustEvalContext::over_support_of(&loss, Task::Regression, cost, &empirical, &extra)
                .unwrap();
        let x = vec![r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
        let k = if case % 5 == 0 { 0.0 } else { r.gen_range(0.0..4.0) };
        let direct = reformulated_objective(&ctx, &empirical, &x, k).unwrap();
        let (lp, _witness) = worst_case_lp(&ctx, &empirical, &x, k).unwrap();
        match (direct, lp) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => assert!(
                (a - b).abs() <= 1e-7,
                "case {case}: route gap {} exceeds 1e-7",
                (a - b).abs()
            ),
            (a, b) => assert_eq!(a, b, "case {case}: routes disagree on finiteness"),
        }
    }
    let elapsed = start.elapsed();
    println!("200 instances, both cost variants, worst route gap <= 1e-7, {elapsed:.2?}");
    assert!(elapsed.as_secs() < 30, "budget exceeded: {elapsed:.2?} >= 30s");
}

// ============================================================================
// 2. Transport oracle: quantile formula agreement and metric axioms
// ============================================================================

#[test]
fn criterion_02_transport_matches_quantile_formula_and_metric_axioms() {
    let _g = serial();
    let start = Instant::now();
    let mut r = rng(4002);
    for case in 0..100 {
        let p = random_joint(&mut r, 1, 2, 12);
        let q = random_joint(&mut r, 1, 2, 12);
        let (lp, _) = wasserstein(&p, &q, GroundCost::FullL2).unwrap();
        let ExtReal::Finite(lp) = lp else { panic!("finite cost expected on the line") };
        let direct = wasserstein_1d(&p, &q).unwrap();
        assert!(
            (lp - direct).abs() <= 1e-9,
            "case {case}: program {lp} vs quantile {direct}"
        );
    }
    let mut worst_sym: f64 = 0.0;
    let mut worst_tri: f64 = f64::NEG_INFINITY;
    for case in 0..100 {
        let dim = 2 + case % 2;
        let p = random_joint(&mut r, dim, 2, 8);
        let q = random_joint(&mut r, dim, 2, 8);
        let s = random_joint(&mut r, dim, 2, 8);
        let d = |a: &DiscreteDistribution, b: &DiscreteDistribution| -> f64 {
            match wasserstein(a, b, GroundCost::FullL2).unwrap().0 {
                ExtReal::Finite(v) => v,
                ExtReal::PosInf => panic!("full cost is always finite"),
            }
        };
        let (pq, qp, pp) = (d(&p, &q), d(&q, &p), d(&p, &p));
        let (ps, qs) = (d(&p, &s), d(&q, &s));
        assert!(pq >= 0.0 && pp.abs() <= 1e-8, "case {case}: identity violated: d(p,p)={pp}");
        assert!((pq - qp).abs() <= 1e-8, "case {case}: symmetry violated: {pq} vs {qp}");
        assert!(ps <= pq + qs + 1e-8, "case {case}: triangle violated: {ps} > {pq} + {qs}");
        worst_sym = worst_sym.max((pq - qp).abs());
        worst_tri = worst_tri.max(ps - pq - qs);
    }
    let elapsed = start.elapsed();
    println!(
        "100 line instances <= 1e-9, 100 axiom triples (worst symmetry gap {worst_sym:.2e}, \
         worst triangle slack {worst_tri:.2e}), {elapsed:.2?}"
    );
    assert!(elapsed.as_secs() < 30, "budget exceeded: {elapsed:.2?} >= 30s");
}

// ============================================================================
// 3. Certificates never exceed the loss slope
// ============================================================================

#[test]
fn criterion_03_searched_certificates_respect_the_slope_bound_on_100_solves() {
    let _g = serial();
    let mut r = rng(4003);
    let regression: [Loss; 4] = [
        Loss::L1,
        Loss::Huber { delta: 0.5 },
        Loss::Pinball { delta: 0.3 },
        Loss::Insensitive { delta: 0.2 },
    ];
    let classification: [Loss; 3] = [Loss::Hinge, Loss::SmoothHinge, Loss::Logistic];
    let opts = SolverOptions::default();
    let mut violations = 0usize;
    for case in 0..100 {
        let classify = case % 3 == 2;
        // Classification pairs with the feature-only cost; regression
        // alternates between both cost variants.
        let (loss, task, data, cost) = if classify {
            let loss = classification[(case / 3) % classification.len()].clone();
            let n = r.gen_range(25..60);
            let w = vec![r.gen_range(-1.5..1.5), r.gen_range(-1.5..1.5)];
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)])
                .collect();
            let labels: Vec<f64> = rows
                .iter()
                .map(|u| {
                    if u[0] * w[0] + u[1] * w[1] + r.gen_range(-0.3..0.3) >= 0.0 { 1.0 } else { -1.0 }
                })
                .collect();
            let data = rskit::distributions::Dataset::from_rows(rows, labels).unwrap();
            (loss, Task::Classification, data, GroundCost::FeatureOnly)
        } else {
            let loss = regression[case % regression.len()].clone();
            let cfg = SyntheticConfig {
                m_u: 2,
                x_star: vec![r.gen_range(-2.5..2.5), r.gen_range(-2.5..2.5)],
                degree: 0.0,
                noise_std_sq: r.gen_range(0.02..0.3),
                feature_mean: r.gen_range(-0.5..0.8),
                feature_var: r.gen_range(0.2..1.0),
            };
            let n = r.gen_range(25..80);
            let data = cfg.sample_dataset(n, &mut r).unwrap();
            let cost = if case % 2 == 0 { GroundCost::FeatureOnly } else { GroundCost::FullL2 };
            (loss, Task::Regression, data, cost)
        };
        let variant = norm_variant_for_cost(cost, task).unwrap();
        let eps = r.gen_range(0.02..0.5);
        let sol = solve_rs(&loss, task, &data, eps, variant, &opts).unwrap();
        let empirical = DiscreteDistribution::from_dataset(&data);
        let ctx =
            RobustEvalContext::over_support_of(&loss, task, cost, &empirical, &[]).unwrap();
        let searched = fragility(&ctx, &empirical, &sol.x_hat, sol.tau, 1e-10).unwrap();
        let l_h = loss.lipschitz_required().unwrap() * variant.value(&sol.x_hat);
        match searched {
            ExtReal::Finite(k) if k <= l_h + 1e-8 => {}
            other => {
                violations += 1;
                println!("case {case}: searched certificate {other:?} exceeds the slope bound {l_h}");
            }
        }
    }
    println!("100 solves across 7 losses and both cost variants, {violations} violations");
    assert_eq!(violations, 0, "{violations} searched certificates exceeded the slope bound");
}

// ============================================================================
// 4. Ball solution at the reported weight reproduces the satisficing solution
// ============================================================================

#[test]
fn criterion_04_ball_solutions_match_satisficing_solutions_in_95_percent() {
    let _g = serial();
    let mut r = rng(4004);
    let opts = SolverOptions::default();
    let mut matched = 0usize;
    let mut total = 0usize;
    for instance in 0..50 {
        let cfg = SyntheticConfig {
            m_u: 2,
            x_star: vec![r.gen_range(-2.5..2.5), r.gen_range(-2.5..2.5)],
            degree: 0.0,
            noise_std_sq: r.gen_range(0.02..0.3),
            feature_mean: r.gen_range(-0.5..0.8),
            feature_var: r.gen_range(0.2..1.0),
        };
        let data = cfg.sample_dataset(100, &mut r).unwrap();
        for eps in [0.05, 0.1, 0.2, 0.3] {
            total += 1;
            let rs = solve_rs(&Loss::L1, Task::Regression, &data, eps, NormVariant::XOnly, &opts)
                .unwrap();
            let dro = solve_dro(
                &Loss::L1,
                Task::Regression,
                &data,
                rs.lambda_hat,
                NormVariant::XOnly,
                &opts,
            )
            .unwrap();
            let gap = rs
                .x_hat
                .iter()
                .zip(&dro.x_hat)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if gap <= 1e-4 {
                matched += 1;
            } else {
                println!(
                    "instance {instance}, slack {eps}: coordinate gap {gap:.2e} \
                     (flat optimum tie at weight {:.6})",
                    rs.lambda_hat
                );
            }
        }
    }
    println!("{matched}/{total} pairs matched within 1e-4 max-coordinate");
    assert!(
        matched * 100 >= total * 95,
        "only {matched}/{total} ball solutions matched the satisficing solutions"
    );
}

// ============================================================================
// 5. Exact-distance guarantee chains hold in every replication
// ============================================================================

#[test]
fn criterion_05_exact_distance_chains_hold_in_every_replication() {
    let _g = serial();
    let start = Instant::now();
    let cfg = ExperimentConfig::for_scenario(Scenario::Coverage);
    let result = run_scenario(&cfg).unwrap();
    let mut checked = 0usize;
    for row in &result.rows {
        assert!(
            !row.method.starts_with("violation:"),
            "guarantee violated with diagnostics: {}",
            row.method
        );
        if row.method.starts_with("chain:")
            || row.method.starts_with("regret:")
            || row.method.starts_with("shifted_chain:")
        {
            checked += 1;
            assert_eq!(
                row.metric_mean, 1.0,
                "{} at N={} passed only {:.4} of replications",
                row.method, row.grid_value, row.metric_mean
            );
            assert_eq!(row.failures, 0, "{} lost replications to solver failures", row.method);
            assert_eq!(row.replications, cfg.replications);
        }
    }
    assert_eq!(checked, 24, "expected 2 sizes x 4 slacks x 3 guarantees");
    let elapsed = start.elapsed();
    println!("24 pass-rate cells all exactly 1.0 over {} replications, {elapsed:.2?}", cfg.replications);
    assert!(elapsed.as_secs() < 300, "budget exceeded: {elapsed:.2?} >= 5min");
}

// ============================================================================
// 6. Tail levels invert exactly and radii shrink with more data
// ============================================================================

#[test]
fn criterion_06_tail_levels_invert_and_radii_shrink_with_n() {
    let _g = serial();
    let mut r = rng(4006);
    let mut asserted = 0usize;
    for case in 0..1000 {
        let m = 1 + case % 5;
        let beta_kind = match case % 3 {
            0 => BetaSchedule::Constant { beta: r.gen_range(0.001..0.5) },
            1 => BetaSchedule::ExpSqrt { gamma: r.gen_range(0.05..2.0) },
            _ => BetaSchedule::Polynomial { alpha: r.gen_range(0.2..3.0) },
        };
        let schedule = RemainderSchedule {
            beta_kind,
            c1: r.gen_range(1.0..10.0),
            c2: r.gen_range(0.1..5.0),
            a: r.gen_range(1.2..5.0),
            m,
        };
        let n = r.gen_range(2..1_000_000usize);
        let rem = remainder(&schedule, n).unwrap();
        if rem.degenerate {
            continue;
        }
        asserted += 1;
        let exponent = if rem.r_n <= 1.0 { m.max(2) as f64 } else { schedule.a };
        let recovered = schedule.c1 * (-schedule.c2 * n as f64 * rem.r_n.powf(exponent)).exp();
        assert!(
            (recovered - rem.beta_n).abs() <= 1e-10 * rem.beta_n.max(f64::MIN_POSITIVE),
            "case {case}: re-substitution {recovered} misses the tail level {}",
            rem.beta_n
        );
    }
    assert!(asserted >= 900, "too few non-degenerate draws: {asserted}");
    for trial in 0..30 {
        let beta_kind = match trial % 3 {
            0 => BetaSchedule::Constant { beta: r.gen_range(0.001..0.5) },
            1 => BetaSchedule::ExpSqrt { gamma: r.gen_range(0.05..2.0) },
            _ => BetaSchedule::Polynomial { alpha: r.gen_range(0.2..3.0) },
        };
        let schedule = RemainderSchedule {
            beta_kind,
            c1: r.gen_range(1.0..10.0),
            c2: r.gen_range(0.1..5.0),
            a: r.gen_range(1.2..5.0),
            m: 1 + trial % 5,
        };
        let mut prev = f64::INFINITY;
        let mut n = 4usize;
        for _ in 0..12 {
            let rem = remainder(&schedule, n).unwrap();
            if !rem.degenerate {
                assert!(
                    rem.r_n <= prev + 1e-12,
                    "trial {trial}: radius grew from {prev} to {} at N={n}",
                    rem.r_n
                );
                prev = rem.r_n;
            }
            n *= 2;
        }
    }
    println!("{asserted} inversions within 1e-10 relative, radii nonincreasing on 30 schedules");
}

// ============================================================================
// 7. Small-sample study orderings
// ============================================================================

#[test]
fn criterion_07_small_sample_orderings() {
    let _g = serial();
    let start = Instant::now();
    let mut cfg = ExperimentConfig::for_scenario(Scenario::SampleSize);
    cfg.replications = 200;
    let result = run_scenario(&cfg).unwrap();
    let n_small = *cfg.n_grid.first().unwrap() as f64;
    let n_large = *cfg.n_grid.last().unwrap() as f64;
    let biggest = format!("rs:{}", cfg.epsilon_grid.last().unwrap());
    let erm_small = mean_at(&result, n_small, "erm");
    let rs_small = mean_at(&result, n_small, &biggest);
    let erm_large = mean_at(&result, n_large, "erm");
    let rs_large = mean_at(&result, n_large, &biggest);
    let gap_small = rs_small - erm_small;
    let gap_large = rs_large - erm_large;
    let elapsed = start.elapsed();
    println!(
        "N={n_small}: erm {erm_small:.4}, {biggest} {rs_small:.4} (gap {gap_small:+.4}); \
         N={n_large}: erm {erm_large:.4}, {biggest} {rs_large:.4} (gap {gap_large:+.4}); {elapsed:.2?}"
    );
    assert!(elapsed.as_secs() < 600, "budget exceeded: {elapsed:.2?} >= 10min");
    assert!(
        gap_large < gap_small,
        "gap did not shrink with data: {gap_large:+.4} at N={n_large} vs {gap_small:+.4} at N={n_small}"
    );
    // Unattainable under the documented data model: the planted signal is two
    // orders of magnitude above the noise, so on the unshifted target every
    // norm-shrinking solution pays a squared bias that no variance saving can
    // repay at any sample size down to the interpolation regime. The measured
    // optimal shrinkage at N=30 is 0.4 percent, while the smallest tolerance
    // on the grid already forces 2.5 percent.
    assert!(
        rs_small < erm_small,
        "at N={n_small} the largest-slack model measures {rs_small:.4}, \
         not below the plain minimizer at {erm_small:.4}"
    );
}

// ============================================================================
// 8. Shifted-evaluation orderings
// ============================================================================

#[test]
fn criterion_08_shift_orderings_from_degree_six_up() {
    let _g = serial();
    let start = Instant::now();
    let mut cfg = ExperimentConfig::for_scenario(Scenario::Shift);
    cfg.replications = 200;
    let result = run_scenario(&cfg).unwrap();
    for &degree in cfg.degree_grid.iter().filter(|d| **d >= 6.0) {
        let erm = mean_at(&result, degree, "erm");
        for eps in &cfg.epsilon_grid {
            let rs = mean_at(&result, degree, &format!("rs:{eps}"));
            assert!(
                rs <= erm,
                "degree {degree}: slack {eps} measures {rs:.4}, above the plain minimizer {erm:.4}"
            );
        }
        println!("degree {degree}: erm {erm:.4}, all satisficing variants at or below");
    }
    let elapsed = start.elapsed();
    println!("orderings hold for every degree >= 6, {elapsed:.2?}");
    assert!(elapsed.as_secs() < 300, "budget exceeded: {elapsed:.2?} >= 5min");
}

// ============================================================================
// 9. Hyperparameter sensitivity bands
// ============================================================================

#[test]
fn criterion_09_hyperparameter_sensitivity_bands() {
    let _g = serial();
    let start = Instant::now();
    let mut dro_cfg = ExperimentConfig::for_scenario(Scenario::SensitivityDro);
    dro_cfg.replications = 500;
    let dro = run_scenario(&dro_cfg).unwrap();
    let mut rs_cfg = ExperimentConfig::for_scenario(Scenario::SensitivityRs);
    rs_cfg.replications = 500;
    let rs = run_scenario(&rs_cfg).unwrap();
    let elapsed = start.elapsed();

    let erm = mean_at(&dro, 0.0, "erm");
    let dro_curve = curve(&dro, "dro");
    let rs_curve = curve(&rs, "rs");
    let (r_opt, dro_min) =
        dro_curve.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let (eps_opt, rs_min) = rs_curve.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let crossing = dro_curve
        .iter()
        .find(|(g, v)| *g > r_opt && *v > erm)
        .map(|(g, _)| *g);
    let dro_band_max = dro_curve
        .iter()
        .filter(|(g, _)| *g >= 0.85 * r_opt && *g <= 1.15 * r_opt)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    // The displayed satisficing knob is 1 plus the tolerance, so the 15
    // percent band is taken on that axis.
    let (band_lo, band_hi) = (0.85 * (1.0 + eps_opt) - 1.0, 1.15 * (1.0 + eps_opt) - 1.0);
    let rs_band_max = rs_curve
        .iter()
        .filter(|(g, _)| *g >= band_lo && *g <= band_hi)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);

    println!("baseline mean squared error {erm:.5}");
    println!(
        "ball sweep: optimum r={r_opt} at {dro_min:.5} (required within [0.165, 0.265]); \
         crosses baseline at r={crossing:?} (required within [0.21, 0.27]); \
         band max {dro_band_max:.5} on [{:.4}, {:.4}]",
        0.85 * r_opt,
        1.15 * r_opt
    );
    println!(
        "satisficing sweep: optimum 1+eps={:.3} at {rs_min:.5} (required within [1.185, 1.385]); \
         band max {rs_band_max:.5} on tolerance [{band_lo:.4}, {band_hi:.4}]",
        1.0 + eps_opt
    );
    println!("band ratio {:.3} (required >= 2)", dro_band_max / rs_band_max);
    println!("500 replications per sweep, {elapsed:.2?}");
    assert!(elapsed.as_secs() < 900, "budget exceeded: {elapsed:.2?} >= 15min");

    let mut failures: Vec<String> = Vec::new();
    if !(0.165..=0.265).contains(&r_opt) {
        failures.push(format!("optimal radius {r_opt} outside [0.165, 0.265]"));
    }
    // Unattainable under the documented data model: the decision collapses to
    // zero only near r = 0.60 (the norm of the mean signed feature), so the
    // sweep stays below the baseline until r = 0.40. A crossing near 0.24
    // would need the collapse radius itself to sit near 0.25.
    match crossing {
        Some(c) if (0.21..=0.27).contains(&c) => {}
        c => failures.push(format!("baseline crossing at {c:?}, outside [0.21, 0.27]")),
    }
    // Unattainable under the documented data model: the evaluation target is
    // a 10 percent shrinkage of the planted parameter, and the tolerance that
    // produces a 10 percent shrinkage is near 0.13, not near 0.285.
    if !(1.185..=1.385).contains(&(1.0 + eps_opt)) {
        failures.push(format!("optimal 1+eps {:.3} outside [1.185, 1.385]", 1.0 + eps_opt));
    }
    // Unattainable under the documented data model: both band maxima sit on
    // the flat left side of the collapse, so their ratio is near 1, not 2.
    if dro_band_max < 2.0 * rs_band_max {
        failures.push(format!(
            "band maxima {dro_band_max:.5} vs {rs_band_max:.5}: ratio {:.3} below 2",
            dro_band_max / rs_band_max
        ));
    }
    assert!(failures.is_empty(), "sensitivity sub-checks failed: {}", failures.join("; "));
}

// ============================================================================
// 10. Correspondence curve shape in both dimensions
// ============================================================================

#[test]
fn criterion_10_correspondence_curve_shape() {
    let _g = serial();
    // The replication count is raised beyond the sweep default because the
    // +1e-3 slack on second differences is a noise allowance, and the Monte
    // Carlo error of 200-replication means is itself of that order.
    let mut two = ExperimentConfig::for_scenario(Scenario::Correspondence);
    two.replications = 1000;
    let mut ten = ExperimentConfig::for_scenario(Scenario::Correspondence);
    ten.synthetic = SyntheticConfig::alternating(10);
    ten.replications = 1000;
    let plateaus: Vec<f64> = [two, ten]
        .iter()
        .map(|cfg| {
            let dim = cfg.synthetic.m_u;
            let result = run_scenario(cfg).unwrap();
            let pts = curve(&result, "rs");
            for w in pts.windows(2) {
                assert!(
                    w[1].1 >= w[0].1,
                    "{dim}-dimensional curve decreases between tolerances {} and {}",
                    w[0].0,
                    w[1].0
                );
            }
            let worst = pts
                .windows(3)
                .map(|w| w[2].1 - 2.0 * w[1].1 + w[0].1)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(
                worst <= 1e-3,
                "{dim}-dimensional curve bends upward: max second difference {worst:+.2e}"
            );
            let plateau = pts.last().unwrap().1;
            println!(
                "{dim}-dimensional curve: nondecreasing, max second difference {worst:+.2e}, \
                 plateau {plateau:.5}"
            );
            plateau
        })
        .collect();
    assert!(
        plateaus[1] < plateaus[0],
        "ten-dimensional plateau {:.5} is not below the two-dimensional plateau {:.5}",
        plateaus[1],
        plateaus[0]
    );
}
