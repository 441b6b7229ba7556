//! Exact symbolic algebra over exponential-polynomial functions of time
//! with polynomial parameter coefficients, closed under the tail and
//! forward convolution integrals.
//!
//! All values are immutable after construction and all operations are
//! pure functions, so everything here is `Send + Sync`.

mod conv;
mod poly;
mod rate;
mod series;

pub use conv::{forward_conv, tail_conv};
pub use poly::ParamPoly;
pub use rate::{
    commensurate_lattice, rational_reconstruct, RateBasis, RateCombo, MAX_RATIO_DENOMINATOR,
    RATIO_TOLERANCE,
};
pub use series::{substitute_into_poly, ExpSeries, ExpTerm, TermRecord, TERM_CAP, TOL_RATE};
