//! Correlated topic model with diagonal-orthant probit topic proportions.
//!
//! Each document `d` carries a latent Gaussian vector `eta_d ~ MVN(mu, Sigma)`
//! whose covariance captures correlation between topics. Topic proportions
//! come from the diagonal-orthant probit map: component `k` gets the
//! probability that a `N(eta_d, I)` draw lands in the orthant where only
//! coordinate `k` is positive, renormalised over the `K` single-positive
//! orthants,
//!
//! ```text
//! theta_d^k = Phi(eta_d^k) prod_{j!=k} Phi(-eta_d^j) / sum_l [ ... l ... ]
//! ```
//!
//! The posterior is sampled by Gibbs sweeps that stay conjugate throughout:
//!
//! * truncated-normal auxiliary variables `Y_dn` (one `K`-vector per word,
//!   positive in the assigned coordinate, negative elsewhere),
//! * a multivariate-normal update for `eta_d` given the auxiliaries,
//! * collapsed multinomial updates for the per-word topic assignments
//!   `z_dn` with the topic-word table integrated out,
//! * a Normal-Inverse-Wishart update for `(mu, Sigma)`.
//!
//! The [`mnp`] module carries the traditional maximum-utility multinomial
//! probit formulation (Monte-Carlo probabilities, rejection-sampled
//! auxiliaries) purely as a baseline for efficiency comparisons; it is not
//! used by the fitting path.
//!
//! Everything is deterministic given a seed: random draws come from
//! counter-derived [`rng::RngStream`] substreams, so document-parallel and
//! sequential execution produce identical output.

pub mod corpus;
pub mod diagnostics;
pub mod distributions;
pub mod do_probit;
pub mod error;
pub mod gibbs;
pub mod mnp;
pub mod model;
pub(crate) mod par;
pub mod rng;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
