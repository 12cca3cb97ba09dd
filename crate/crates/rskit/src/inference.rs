//! Finite-sample guarantees for satisficing decisions: concentration
//! remainders, two-sided confidence intervals for the optimal expected
//! loss, excess-risk bounds, and widenings for evaluation under a shifted
//! distribution.
//!
//! The remainder r_N is the transport radius within which the empirical
//! distribution of N samples stays of the truth except with probability
//! beta_N, under a tail bound of the form
//!
//!   P( W(P_hat_N, P) >= r ) <= c1 exp(-c2 N r^max{m,2})  for r <= 1,
//!   P( W(P_hat_N, P) >= r ) <= c1 exp(-c2 N r^a)         for r > 1,
//!
//! where m is the joint observation dimension (features plus label) and
//! a > 1 governs the large-deviation regime. Solving beta_N = c1 exp(...)
//! for r gives the piecewise closed forms implemented here. The constants
//! c1 and c2 depend on the sampling distribution and are configuration
//! inputs; the placeholder defaults are for qualitative exploration only
//! and carry no coverage guarantee.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RsError};
use crate::solvers::RsSolution;

// ============================================================================
// Remainder schedules
// ============================================================================

/// How the per-sample-size tail level beta_N is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSchedule {
    /// beta_N = beta for a fixed beta in (0, 1).
    Constant { beta: f64 },
    /// beta_N = exp(-gamma sqrt(N)) for gamma > 0.
    ExpSqrt { gamma: f64 },
    /// beta_N = N^(-alpha) for alpha > 0. At N = 1 this gives beta = 1 and
    /// a degenerate (vacuous) remainder.
    Polynomial { alpha: f64 },
}

/// The tail bound parameters and a beta schedule, together defining the
/// concentration radius r_N at every sample size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemainderSchedule {
    pub beta_kind: BetaSchedule,
    /// Leading tail constant. Must be at least 1: the tail bound is a
    /// probability bound, and at r = 0 it asserts 1 <= c1.
    pub c1: f64,
    /// Exponential tail rate, positive.
    pub c2: f64,
    /// Large-radius exponent, greater than 1.
    pub a: f64,
    /// Joint observation dimension (features plus label), at least 1.
    pub m: usize,
}

impl RemainderSchedule {
    /// A schedule with placeholder tail constants c1 = 2, c2 = 1, a = 3.
    ///
    /// Warning: the true constants depend on the sampling distribution and
    /// are rarely available in closed form. Radii computed from these
    /// placeholders are for qualitative exploration only and carry no
    /// coverage guarantee at the nominal level.
    pub fn with_placeholder_constants(beta_kind: BetaSchedule, m: usize) -> Self {
        RemainderSchedule { beta_kind, c1: 2.0, c2: 1.0, a: 3.0, m }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1.is_finite() && self.c1 >= 1.0) {
            return Err(RsError::param(format!(
                "c1 must be at least 1 (the tail bound is a probability bound), got {}",
                self.c1
            )));
        }
        if !(self.c2.is_finite() && self.c2 > 0.0) {
            return Err(RsError::param(format!("c2 must be positive, got {}", self.c2)));
        }
        if !(self.a.is_finite() && self.a > 1.0) {
            return Err(RsError::param(format!(
                "the large-radius exponent must exceed 1, got {}",
                self.a
            )));
        }
        if self.m == 0 {
            return Err(RsError::param(
                "the observation dimension must be positive".to_string(),
            ));
        }
        match self.beta_kind {
            BetaSchedule::Constant { beta } => {
                if !(beta.is_finite() && beta > 0.0 && beta < 1.0) {
                    return Err(RsError::param(format!(
                        "a constant tail level must lie in (0, 1), got {beta}"
                    )));
                }
            }
            BetaSchedule::ExpSqrt { gamma } => {
                if !(gamma.is_finite() && gamma > 0.0) {
                    return Err(RsError::param(format!(
                        "the exponential tail rate must be positive, got {gamma}"
                    )));
                }
            }
            BetaSchedule::Polynomial { alpha } => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(RsError::param(format!(
                        "the polynomial tail exponent must be positive, got {alpha}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The tail level beta_N at sample size n.
    pub fn beta_at(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self.beta_kind {
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::ExpSqrt { gamma } => (-gamma * nf.sqrt()).exp(),
            BetaSchedule::Polynomial { alpha } => nf.powf(-alpha),
        }
    }

    /// ln(c1 / beta_N), computed without forming beta_N so that fast
    /// schedules cannot underflow it to zero.
    fn log_ratio(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self.beta_kind {
            BetaSchedule::Constant { beta } => (self.c1 / beta).ln(),
            BetaSchedule::ExpSqrt { gamma } => self.c1.ln() + gamma * nf.sqrt(),
            BetaSchedule::Polynomial { alpha } => self.c1.ln() + alpha * nf.ln(),
        }
    }
}

/// Concentration radius at one sample size, with the tail level it was
/// derived from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Remainder {
    /// The radius r_N.
    pub r_n: f64,
    /// The tail level beta_N the radius corresponds to.
    pub beta_n: f64,
    /// Confidence level 1 - beta_N.
    pub level: f64,
    /// True when beta_N >= 1: the guarantee is vacuous and no interval can
    /// be built from this remainder.
    pub degenerate: bool,
    /// True when m = 2, where the stated tail bound sits at the edge of
    /// its validity range; treat the radius as indicative.
    pub dimension_caveat: bool,
}

impl Remainder {
    /// A remainder supplied directly as a radius and confidence level, for
    /// callers that obtained r by other means.
    pub fn with_level(r_n: f64, level: f64) -> Result<Self> {
        if !(r_n.is_finite() && r_n >= 0.0) {
            return Err(RsError::param(format!(
                "the radius must be nonnegative, got {r_n}"
            )));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(RsError::param(format!(
                "the confidence level must lie in (0, 1), got {level}"
            )));
        }
        Ok(Remainder {
            r_n,
            beta_n: 1.0 - level,
            level,
            degenerate: false,
            dimension_caveat: false,
        })
    }
}

/// The concentration radius r_N at sample size n: the inversion of the
/// tail bound at level beta_N, using exponent max{m, 2} when the resulting
/// radius is at most 1 and exponent a beyond that. The two branches agree
/// at the boundary, so r_N is continuous and monotone in the tail mass.
pub fn remainder(schedule: &RemainderSchedule, n: usize) -> Result<Remainder> {
    schedule.validate()?;
    if n == 0 {
        return Err(RsError::param("the sample size must be positive".to_string()));
    }
    let beta_n = schedule.beta_at(n);
    let q = (schedule.log_ratio(n) / (schedule.c2 * n as f64)).max(0.0);
    let exponent = if q <= 1.0 {
        1.0 / schedule.m.max(2) as f64
    } else {
        1.0 / schedule.a
    };
    Ok(Remainder {
        r_n: q.powf(exponent),
        beta_n,
        level: 1.0 - beta_n,
        degenerate: beta_n >= 1.0,
        dimension_caveat: schedule.m == 2,
    })
}

// ============================================================================
// Confidence intervals
// ============================================================================

/// Which arms the two-sided interval uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalVariant {
    /// Upper arm scaled by the decision's fragility, lower arm by the
    /// Lipschitz bound. The tightest two-sided form.
    FragilityUpper,
    /// Both arms scaled by the Lipschitz bound. Wider, but needs no
    /// fragility computation.
    LipschitzUpper,
    /// Fragility-calibrated arms stretched by a transport budget, for
    /// evaluation under a distribution at known distance from the truth.
    Shifted,
}

/// Two-sided bracket for the optimal expected loss under the sampling
/// distribution, holding with probability at least `level`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Probability with which the bracket holds, in (0, 1).
    pub level: f64,
    pub variant: IntervalVariant,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

fn check_arm_inputs(l_h: f64, rem: &Remainder) -> Result<()> {
    if !(l_h.is_finite() && l_h >= 0.0) {
        return Err(RsError::param(format!(
            "the loss Lipschitz bound must be nonnegative, got {l_h}"
        )));
    }
    if !(rem.r_n.is_finite() && rem.r_n >= 0.0) {
        return Err(RsError::param(format!(
            "the remainder radius must be nonnegative, got {}",
            rem.r_n
        )));
    }
    if rem.degenerate {
        return Err(RsError::validation(
            "the remainder is degenerate (tail level at or above one), so the interval is \
             vacuous"
                .to_string(),
        ));
    }
    Ok(())
}

/// Two-sided confidence interval for the optimal expected loss, anchored
/// at a satisficing solution: the truth lies below tau plus an upper arm
/// and above tau/(1+epsilon) minus a Lipschitz arm, each arm proportional
/// to the concentration radius. `l_h` is the Lipschitz constant of the
/// pointwise loss in the observation at the returned decision.
pub fn confidence_interval(
    rs: &RsSolution,
    l_h: f64,
    rem: &Remainder,
    variant: IntervalVariant,
) -> Result<ConfidenceInterval> {
    check_arm_inputs(l_h, rem)?;
    let base = rs.tau / (1.0 + rs.epsilon);
    let (lower, upper) = match variant {
        IntervalVariant::FragilityUpper => {
            (base - l_h * rem.r_n, rs.tau + rs.k_tau * rem.r_n)
        }
        IntervalVariant::LipschitzUpper => {
            if l_h < rs.k_tau {
                return Err(RsError::Inconsistent(format!(
                    "the Lipschitz bound {l_h} is below the fragility {}; it must dominate \
                     the fragility for the wide interval to be valid",
                    rs.k_tau
                )));
            }
            (base - l_h * rem.r_n, rs.tau + l_h * rem.r_n)
        }
        IntervalVariant::Shifted => {
            return Err(RsError::param(
                "shifted intervals carry a transport budget; use shifted_interval".to_string(),
            ));
        }
    };
    Ok(ConfidenceInterval { lower, upper, level: rem.level, variant })
}

/// The fragility-calibrated interval stretched for evaluation under a
/// distribution at transport distance at most `d_shift` from the truth:
/// each arm reaches over radius r_N + d_shift. When the optimal loss under
/// the shifted distribution is supplied, also returns the excess-risk
/// bound epsilon * j + (2 + epsilon) * l_h * (d_shift + r_N) for the
/// satisficing decision evaluated there.
pub fn shifted_interval(
    rs: &RsSolution,
    l_h: f64,
    rem: &Remainder,
    d_shift: f64,
    j_shifted: Option<f64>,
) -> Result<(ConfidenceInterval, Option<f64>)> {
    check_arm_inputs(l_h, rem)?;
    if !(d_shift.is_finite() && d_shift >= 0.0) {
        return Err(RsError::param(format!(
            "the shift budget must be nonnegative, got {d_shift}"
        )));
    }
    let reach = rem.r_n + d_shift;
    let interval = ConfidenceInterval {
        lower: rs.tau / (1.0 + rs.epsilon) - l_h * reach,
        upper: rs.tau + rs.k_tau * reach,
        level: rem.level,
        variant: IntervalVariant::Shifted,
    };
    let regret = j_shifted.map(|j| rs.epsilon * j + (2.0 + rs.epsilon) * l_h * reach);
    Ok((interval, regret))
}

/// Upper bound on the excess risk of the satisficing decision under the
/// sampling distribution: epsilon * j_star_upper + (2 + epsilon) * l_h *
/// r_n, where j_star_upper bounds the optimal expected loss from above.
pub fn generalization_bound(
    epsilon: f64,
    j_star_upper: f64,
    l_h: f64,
    r_n: f64,
) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(RsError::param(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    if !(j_star_upper.is_finite() && j_star_upper >= 0.0) {
        return Err(RsError::param(format!(
            "the optimal-loss bound must be nonnegative for losses bounded below by zero, \
             got {j_star_upper}"
        )));
    }
    if !(l_h.is_finite() && l_h >= 0.0) {
        return Err(RsError::param(format!(
            "the loss Lipschitz bound must be nonnegative, got {l_h}"
        )));
    }
    if !(r_n.is_finite() && r_n >= 0.0) {
        return Err(RsError::param(format!(
            "the radius must be nonnegative, got {r_n}"
        )));
    }
    Ok(epsilon * j_star_upper + (2.0 + epsilon) * l_h * r_n)
}

// ============================================================================
// Tests
// ============================================================================
