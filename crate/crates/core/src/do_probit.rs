//! Diagonal-orthant probit core: topic distribution, auxiliary matrix,
//! and the conjugate update for the document scores.
//!
//! A document's topic proportions are orthant probabilities of a
//! `N(eta, I)` vector restricted to the K "single positive coordinate"
//! orthants,
//!
//! ```text
//! theta_k = Phi(eta_k) prod_{j != k} Phi(-eta_j)
//!           -----------------------------------------
//!           sum_l Phi(eta_l) prod_{j != l} Phi(-eta_j)
//! ```
//!
//! Every numerator shares the factor `prod_j Phi(-eta_j)`, so after
//! dividing it out only the per-component log-odds
//! `lambda_k = ln Phi(eta_k) - ln Phi(-eta_k)` remain and `theta` is their
//! softmax. That identity is what makes evaluation O(K) and immune to the
//! underflow that kills the direct product for K beyond ~30: with
//! `eta_k = +-30` the products reach 1e-400 while the log-odds stay near
//! +-450.
//!
//! The auxiliary matrix `Y` decouples the orthant constraint into
//! independent sign-truncated normals (positive in the assigned column,
//! negative elsewhere), after which `eta` is conjugate: with unit noise and
//! the word-replicated design `X = 1_N (x) I_K`, the Gaussian posterior has
//! precision `Sigma^{-1} + N I` and mean pulled between the prior and the
//! column sums of `Y`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;

use crate::distributions::{
    sample_mvn, sample_truncnorm_negative, sample_truncnorm_positive, std_normal_log_cdf, MvnParams,
};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Document-level probit scores `eta_d`.
pub type Eta = DVector<f64>;

/// Topic proportions of one document.
///
/// `probs` sums to 1 within 1e-12. `log_probs` carries the same
/// distribution in log space; it stays finite and meaningful even for
/// components whose probability underflows f64 (possible once the spread
/// of `eta` exceeds ~37 standard deviations).
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistribution {
    pub probs: DVector<f64>,
    pub log_probs: DVector<f64>,
}

/// Sign-constrained auxiliary variables for one document: row `n` is the
/// latent `N(eta, I)` vector of word `n`, positive exactly in the column
/// of its assigned topic.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxMatrix {
    /// `N_d x K`.
    pub values: DMatrix<f64>,
    /// Topic label each row's signs were conditioned on.
    pub assignments: Vec<usize>,
}

impl AuxMatrix {
    pub fn n_words(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_topics(&self) -> usize {
        self.values.ncols()
    }
}

/// Sum `values` in ascending order. Summation order is then a function of
/// the multiset of inputs alone, which makes [`do_theta`] exactly
/// permutation-equivariant instead of equivariant up to an ulp. (The sort
/// makes the evaluation O(K log K) rather than O(K); at topic counts the
/// log factor is beneath measurement.)
fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("non-finite summand"));
    values.iter().sum()
}

/// Map probit scores to topic proportions.
pub fn do_theta(eta: &Eta) -> Result<TopicDistribution> {
    let k = eta.len();
    if k < 2 {
        return Err(Error::invalid(format!(
            "topic distribution needs K >= 2, got K = {k}"
        )));
    }
    if eta.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("eta has a non-finite component"));
    }

    // Per-component log odds of the positive orthant coordinate.
    let lambda = DVector::from_fn(k, |i, _| {
        std_normal_log_cdf(eta[i]) - std_normal_log_cdf(-eta[i])
    });

    let max = lambda.max();
    let mut terms: Vec<f64> = lambda.iter().map(|l| (l - max).exp()).collect();
    let log_norm = max + ordered_sum(&mut terms).ln();

    let log_probs = lambda.map(|l| l - log_norm);
    let mut probs: Vec<f64> = log_probs.iter().map(|l| l.exp()).collect();
    let total = ordered_sum(&mut probs.clone());
    probs.iter_mut().for_each(|p| *p /= total);

    Ok(TopicDistribution {
        probs: DVector::from_vec(probs),
        log_probs,
    })
}

/// Draw the auxiliary matrix for one document: row `n` has a positive
/// truncated normal in the assigned column and negative ones elsewhere,
/// all centred on `eta` with unit variance. Cost is O(K) per word with no
/// rejection-until-valid loop, so it cannot fail for any `K` or `eta`.
///
/// Each word draws from its own substream of `stream`, making the result
/// independent of evaluation order.
pub fn sample_aux(eta: &Eta, assignments: &[usize], stream: RngStream) -> AuxMatrix {
    let k = eta.len();
    let n = assignments.len();
    let mut values = DMatrix::zeros(n, k);
    for (w, &label) in assignments.iter().enumerate() {
        assert!(label < k, "assignment {label} out of range for K = {k}");
        let mut rng = stream.child(w as u64).rng();
        for j in 0..k {
            values[(w, j)] = if j == label {
                sample_truncnorm_positive(eta[j], &mut rng)
            } else {
                sample_truncnorm_negative(eta[j], &mut rng)
            };
        }
    }
    AuxMatrix {
        values,
        assignments: assignments.to_vec(),
    }
}

/// Gaussian conditional of `eta` given the auxiliary matrix.
///
/// With unit noise and every word sharing the document's `eta`, the
/// word-replicated design collapses: `X^T A^{-1} X = N_d I` and
/// `X^T vec(Y)` is the column sum of `Y`. Hence
/// `Sigma_eta = (Sigma^{-1} + N_d I)^{-1}` and
/// `mu_eta = Sigma_eta (Sigma^{-1} mu + colsum Y)`. The covariance depends
/// on `Y` only through the row count.
pub fn eta_posterior(
    aux: &AuxMatrix,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> Result<MvnParams> {
    let k = sigma.nrows();
    let n = aux.n_words();
    if n == 0 {
        return Err(Error::invalid("eta update needs at least one word"));
    }
    if sigma.ncols() != k || mu.len() != k || aux.n_topics() != k {
        return Err(Error::invalid(format!(
            "eta update dimension mismatch: mu {}, sigma {}x{}, aux K {}",
            mu.len(),
            sigma.nrows(),
            sigma.ncols(),
            aux.n_topics()
        )));
    }

    let prior_chol =
        Cholesky::new(sigma.clone()).ok_or(Error::NotPositiveDefinite("eta prior covariance"))?;
    let sigma_inv = prior_chol.inverse();

    let mut precision = sigma_inv.clone();
    for i in 0..k {
        precision[(i, i)] += n as f64;
    }
    let cov = Cholesky::new(precision)
        .ok_or(Error::NotPositiveDefinite("eta posterior precision"))?
        .inverse();
    let cov = 0.5 * (&cov + cov.transpose());

    let colsum = DVector::from_fn(k, |j, _| aux.values.column(j).sum());
    let mean = &cov * (sigma_inv * mu + colsum);
    MvnParams::new(mean, cov)
}

/// Draw `eta` from its conditional given the auxiliary matrix and the
/// current topic-score prior `(mu, sigma)`.
pub fn update_eta<R: Rng + ?Sized>(
    aux: &AuxMatrix,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    rng: &mut R,
) -> Result<Eta> {
    let params = eta_posterior(aux, mu, sigma)?;
    sample_mvn(&params, rng)
}
