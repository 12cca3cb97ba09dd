//! Robust satisficing toolkit for linear prediction under distribution shift.
//!
//! The crate solves empirical risk minimization, norm-regularized and
//! distributionally robust counterparts, and robust satisficing programs for
//! linear models with Lipschitz losses; computes exact optimal-transport
//! distances between finite samples; evaluates worst-case expected losses
//! over transport balls; derives finite-sample confidence intervals from
//! measure-concentration remainders; and drives Monte Carlo experiments
//! comparing the methods on synthetic data.

pub mod distributions;
pub mod error;
pub mod experiments;
pub mod ext;
pub mod inference;
pub mod losses;
pub mod robust;
pub mod solvers;
pub mod transport;

mod linalg;
mod rng;

pub use error::{Result, RsError};
pub use ext::ExtReal;
pub use losses::{pointwise_loss, Lipschitz, Loss, Task};
