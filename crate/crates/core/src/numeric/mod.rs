//! The independent numerical oracle: trajectory integration, quadrature,
//! numerical evaluation of the near-identity transformation, and the
//! fitting machinery that verifies the guaranteed orders.

mod fit;
mod psi;
mod quad;
mod rk45;

pub use fit::{
    default_window, fit_decay, fit_fixed_rate_affine, fit_pure_exponential, fit_relation,
    FitModel, FitReport, Regressor,
};
pub use psi::{psi_numeric, psi_numeric_with, PsiOptions};
pub use quad::{quadrature, UpperLimit};
pub use rk45::{integrate, integrate_rhs, IntegrateOptions, Trajectory};
