//! Design of privacy mechanisms under per-letter (point-wise) leakage
//! budgets.
//!
//! Given a leakage channel `P_{X|Y}`, a marginal `P_Y` and a non-increasing
//! budget vector `eps_1 >= ... >= eps_K >= 0`, the crate designs a filter
//! `P_{U|Y}` maximizing the disclosed information `I(U;Y)` while keeping
//! each letter's divergence `D(P_{X|U=u_i} || P_X)` inside its own budget:
//!
//! - [`invertible::design_invertible`]: closed-form construction for square
//!   invertible channels under chi-square budgets, driven by the top
//!   singular pair of `W = diag(1/sqrt(P_Y)) P_{X|Y}^{-1} diag(sqrt(P_X))`.
//! - [`polytope::design_lp`]: extreme-point/LP construction for full-row-rank
//!   and arbitrary channels under l1 budgets, including hybrid budgets where
//!   some letters demand perfect privacy.
//! - [`oracle::brute_force`]: an independent exhaustive/randomized search
//!   over filters for tiny instances, used as ground truth.
//!
//! Everything is generic over the floating scalar through [`scalar::Real`];
//! the `*64` aliases below pin `f64`, which the reference tolerances assume.
//! Information quantities are held in nats internally and converted to bits
//! at reporting boundaries.

pub mod error;
pub mod info;
pub mod invertible;
pub mod linalg;
pub mod lp;
pub mod mechanism;
pub mod oracle;
pub mod polytope;
pub mod prob;
pub mod scalar;

pub use error::{Error, Result};
pub use info::{chi_square, divergence, entropy, kl, l1, mutual_information, DivergenceKind};
pub use invertible::{design_invertible, sandwich_bounds, SpectralDesign};
pub use mechanism::{DesignMode, LeakageEntry, MechanismDesign};
pub use oracle::{brute_force, OracleConfig};
pub use polytope::{design_lp, design_lp_with_mode, enumerate_extreme_points, LpMode};
pub use prob::{
    bayes_filter, BudgetVector, Channel, LeakageMeasure, Perturbation, Pmf, ProblemInstance,
    Tolerances,
};
pub use scalar::Real;

/// `f64` aliases for the common concrete instantiation.
pub type Pmf64 = Pmf<f64>;
pub type Channel64 = Channel<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type BudgetVector64 = BudgetVector<f64>;
pub type ProblemInstance64 = ProblemInstance<f64>;
pub type MechanismDesign64 = MechanismDesign<f64>;
pub type OracleConfig64 = OracleConfig<f64>;
