//! Numerical kernels: chi-squared independence tests and lowess smoothing.

mod chisq;
mod curve;
mod gamma;
mod lowess;

pub use chisq::{chisq_pvalue, chisq_statistic, chisq_test, ChiSquare, ContingencyTable};
pub use curve::Curve;
pub use gamma::{ln_gamma, regularized_gamma_q};
pub use lowess::{lowess, LowessParams};
