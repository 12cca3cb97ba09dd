//! Scalar convex loss catalog with subgradients and Lipschitz constants, and
//! the composition into pointwise losses h(x, (u, y)) for regression and
//! classification.
//!
//! Every loss maps a scalar margin z to a nonnegative value:
//!
//! - hinge:        max{0, 1 - z}
//! - smooth hinge: 1/2 - z for z <= 0; (1-z)^2/2 for 0 < z < 1; 0 for z >= 1
//! - logistic:     ln(1 + exp(-z))
//! - l1:           |z|
//! - squared:      z^2
//! - huber(d):     z^2/2 for |z| <= d; d(|z| - d/2) otherwise
//! - insensitive(d): max{0, |z| - d}
//! - pinball(d):   max{-d z, (1-d) z}
//!
//! Tasks compose the margin: regression z = y - x'u, classification
//! z = y * (x'u) with labels in {-1, +1}.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RsError};
use crate::linalg::dot;

// ============================================================================
// Loss kinds
// ============================================================================

/// A scalar convex loss. Parameterized kinds validate on construction via
/// [`Loss::validate`]; the solver entry points call it on every input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    Hinge,
    SmoothHinge,
    Logistic,
    L1,
    /// Squared loss. Unbounded slope, so operations that need a Lipschitz
    /// constant require `bound`: a declared cap B on |z|, giving the
    /// effective constant 2B.
    Squared {
        #[serde(default)]
        bound: Option<f64>,
    },
    Huber { delta: f64 },
    Insensitive { delta: f64 },
    Pinball { delta: f64 },
}

/// Smallest global Lipschitz constant of a loss, or the unbounded sentinel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lipschitz {
    Finite(f64),
    Unbounded,
}

impl Lipschitz {
    pub fn finite(self) -> Option<f64> {
        match self {
            Lipschitz::Finite(v) => Some(v),
            Lipschitz::Unbounded => None,
        }
    }
}

impl Loss {
    /// Checks parameter ranges: huber and insensitive need delta > 0, pinball
    /// needs delta in (0,1), a squared bound (when given) must be positive.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Loss::Huber { delta } | Loss::Insensitive { delta } => {
                if !(delta.is_finite() && delta > 0.0) {
                    return Err(RsError::param(format!(
                        "delta must be positive and finite, got {delta}"
                    )));
                }
            }
            Loss::Pinball { delta } => {
                if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
                    return Err(RsError::param(format!(
                        "pinball delta must lie in (0,1), got {delta}"
                    )));
                }
            }
            Loss::Squared { bound: Some(b) } => {
                if !(b.is_finite() && b > 0.0) {
                    return Err(RsError::param(format!(
                        "squared-loss bound must be positive and finite, got {b}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// L(z).
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Loss::Hinge => (1.0 - z).max(0.0),
            Loss::SmoothHinge => {
                if z <= 0.0 {
                    0.5 - z
                } else if z < 1.0 {
                    0.5 * (1.0 - z) * (1.0 - z)
                } else {
                    0.0
                }
            }
            Loss::Logistic => stable_log1p_exp(-z),
            Loss::L1 => z.abs(),
            Loss::Squared { .. } => z * z,
            Loss::Huber { delta } => {
                if z.abs() <= delta {
                    0.5 * z * z
                } else {
                    delta * (z.abs() - 0.5 * delta)
                }
            }
            Loss::Insensitive { delta } => (z.abs() - delta).max(0.0),
            Loss::Pinball { delta } => (-delta * z).max((1.0 - delta) * z),
        }
    }

    /// An element of the subdifferential of L at z. At kinks the midpoint of
    /// the subdifferential interval is returned, so the choice is
    /// deterministic: hinge at 1 gives -0.5, l1 at 0 gives 0, insensitive at
    /// +-delta gives +-0.5, pinball at 0 gives (1 - 2 delta)/2.
    pub fn subgradient(&self, z: f64) -> f64 {
        match *self {
            Loss::Hinge => {
                if z < 1.0 {
                    -1.0
                } else if z > 1.0 {
                    0.0
                } else {
                    -0.5
                }
            }
            Loss::SmoothHinge => {
                if z <= 0.0 {
                    -1.0
                } else if z < 1.0 {
                    z - 1.0
                } else {
                    0.0
                }
            }
            Loss::Logistic => -stable_sigmoid(-z),
            Loss::L1 => {
                if z > 0.0 {
                    1.0
                } else if z < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Loss::Squared { .. } => 2.0 * z,
            Loss::Huber { delta } => z.clamp(-delta, delta),
            Loss::Insensitive { delta } => {
                if z > delta {
                    1.0
                } else if z < -delta {
                    -1.0
                } else if z == delta {
                    0.5
                } else if z == -delta {
                    -0.5
                } else {
                    0.0
                }
            }
            Loss::Pinball { delta } => {
                if z > 0.0 {
                    1.0 - delta
                } else if z < 0.0 {
                    -delta
                } else {
                    0.5 * (1.0 - 2.0 * delta)
                }
            }
        }
    }

    /// The smallest global Lipschitz constant. Squared loss is unbounded
    /// unless a domain bound B was declared, in which case it is 2B.
    pub fn lipschitz(&self) -> Lipschitz {
        match *self {
            Loss::Hinge | Loss::SmoothHinge | Loss::Logistic | Loss::L1 => Lipschitz::Finite(1.0),
            Loss::Squared { bound } => match bound {
                Some(b) => Lipschitz::Finite(2.0 * b),
                None => Lipschitz::Unbounded,
            },
            Loss::Huber { delta } => Lipschitz::Finite(delta),
            Loss::Insensitive { .. } => Lipschitz::Finite(1.0),
            Loss::Pinball { delta } => Lipschitz::Finite(delta.max(1.0 - delta)),
        }
    }

    /// Finite Lipschitz constant or an error for operations that require one.
    pub fn lipschitz_required(&self) -> Result<f64> {
        self.lipschitz().finite().ok_or_else(|| {
            RsError::param(
                "squared loss needs a declared bound before Lipschitz-based operations".to_string(),
            )
        })
    }

    /// Value, first, and second derivative of the smoothed loss used by the
    /// Newton polish. Kinks are rounded with the C^2 softplus-style smoother
    /// s_mu(t) = (t + sqrt(t^2 + mu^2))/2, which stays within mu of max{0,t};
    /// already-differentiable kinds are returned exactly (their piecewise
    /// second derivative is enough for damped Newton steps).
    pub(crate) fn smoothed_vgh(&self, z: f64, mu: f64) -> (f64, f64, f64) {
        match *self {
            Loss::Hinge => {
                let (s, sp, spp) = smooth_relu(1.0 - z, mu);
                (s, -sp, spp)
            }
            Loss::SmoothHinge => {
                if z <= 0.0 {
                    (0.5 - z, -1.0, 0.0)
                } else if z < 1.0 {
                    let d = 1.0 - z;
                    (0.5 * d * d, -d, 1.0)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
            Loss::Logistic => {
                let s = stable_sigmoid(-z);
                (stable_log1p_exp(-z), -s, s * (1.0 - s))
            }
            Loss::L1 => {
                let r = (z * z + mu * mu).sqrt();
                (r, z / r, mu * mu / (r * r * r))
            }
            Loss::Squared { .. } => (z * z, 2.0 * z, 2.0),
            Loss::Huber { delta } => {
                if z.abs() <= delta {
                    (0.5 * z * z, z, 1.0)
                } else {
                    (delta * (z.abs() - 0.5 * delta), delta * z.signum(), 0.0)
                }
            }
            Loss::Insensitive { delta } => {
                let (a, ap, app) = smooth_relu(z - delta, mu);
                let (b, bp, bpp) = smooth_relu(-z - delta, mu);
                (a + b, ap - bp, app + bpp)
            }
            Loss::Pinball { delta } => {
                let (s, sp, spp) = smooth_relu(-z, mu);
                ((1.0 - delta) * z + s, (1.0 - delta) - sp, spp)
            }
        }
    }
}

/// s_mu(t) = (t + sqrt(t^2 + mu^2))/2 with first and second derivatives.
fn smooth_relu(t: f64, mu: f64) -> (f64, f64, f64) {
    let r = (t * t + mu * mu).sqrt();
    let v = 0.5 * (t + r);
    let d1 = 0.5 * (1.0 + t / r);
    let d2 = 0.5 * mu * mu / (r * r * r);
    (v, d1, d2)
}

/// ln(1 + exp(t)) without overflow for large |t|.
fn stable_log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// 1 / (1 + exp(-t)) without overflow.
fn stable_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

// ============================================================================
// Task composition
// ============================================================================

/// How a sample (u, y) and a decision x compose into the scalar margin fed to
/// the loss: regression z = y - x'u, classification z = y * (x'u).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

impl Task {
    /// The margin z for one sample.
    pub fn margin(self, x: &[f64], u: &[f64], y: f64) -> f64 {
        let xu = dot(x, u);
        match self {
            Task::Regression => y - xu,
            Task::Classification => y * xu,
        }
    }

    /// d z / d x as a scalar multiple of u: regression -1, classification y.
    pub(crate) fn margin_scale(self, y: f64) -> f64 {
        match self {
            Task::Regression => -1.0,
            Task::Classification => y,
        }
    }
}

/// h(x, (u, y)) = L(z) with z from the task's composition rule.
pub fn pointwise_loss(loss: &Loss, task: Task, x: &[f64], u: &[f64], y: f64) -> Result<f64> {
    if x.len() != u.len() {
        return Err(RsError::shape(format!(
            "decision has dimension {}, features {}",
            x.len(),
            u.len()
        )));
    }
    loss.validate()?;
    Ok(loss.value(task.margin(x, u, y)))
}

// ============================================================================
// Tests
// ============================================================================
