//! Random-variate building blocks for the sampler.
//!
//! Everything here is either a thin, numerically careful wrapper over
//! standard special functions (normal CDF and quantile) or a classic exact
//! sampling scheme (inverse-CDF / tail-rejection truncated normals,
//! Cholesky multivariate normals, Bartlett-decomposition inverse Wisharts,
//! single-uniform categorical draws). All samplers take a caller-supplied
//! generator so determinism stays in the caller's hands.

mod categorical;
mod mvn;
mod normal;
mod truncated;
mod wishart;

pub use categorical::sample_categorical;
pub(crate) use mvn::sample_mvn_prechol;
pub use mvn::{sample_mvn, MvnParams};
pub use normal::{std_normal_cdf, std_normal_log_cdf, std_normal_pdf, std_normal_quantile};
pub use truncated::{sample_truncnorm_negative, sample_truncnorm_positive};
pub use wishart::sample_inverse_wishart;
