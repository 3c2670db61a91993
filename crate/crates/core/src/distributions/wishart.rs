//! Inverse-Wishart sampling by Bartlett decomposition.
//!
//! To draw `Sigma ~ IW(scale, dof)` without ever forming an explicit matrix
//! inverse: factor `scale = L L^T`, build the Bartlett factor `A` of a
//! `Wishart(I, dof)` draw (chi-squared diagonal, standard-normal lower
//! triangle), and solve the triangular system `M A^T = L`. Then
//! `M M^T = L A^{-T} A^{-1} L^T` is exactly the inverse of
//! `L^{-T} A A^T L^{-1} ~ Wishart(scale^{-1}, dof)`, i.e. an inverse-Wishart
//! variate, and it is symmetric positive definite by construction.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::{Error, Result};

/// Draw `Sigma ~ InverseWishart(scale, dof)`.
///
/// Requires `scale` symmetric positive definite and `dof > K - 1`. The mean
/// is `scale / (dof - K - 1)` when `dof > K + 1`.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    scale: &DMatrix<f64>,
    dof: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let k = scale.nrows();
    if scale.ncols() != k || k == 0 {
        return Err(Error::invalid(format!(
            "inverse-Wishart scale must be square and non-empty, got {}x{}",
            scale.nrows(),
            scale.ncols()
        )));
    }
    if !(dof > k as f64 - 1.0) {
        return Err(Error::invalid(format!(
            "inverse-Wishart needs dof > K - 1 = {}, got {dof}",
            k - 1
        )));
    }
    let chol =
        Cholesky::new(scale.clone()).ok_or(Error::NotPositiveDefinite("inverse-Wishart scale"))?;

    // Bartlett factor of Wishart(I, dof): lower triangular, sqrt of
    // chi-squared(dof - i) on the diagonal, N(0,1) below it.
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        let chi2 = Gamma::new(0.5 * (dof - i as f64), 2.0)
            .map_err(|e| Error::invalid(format!("chi-squared shape: {e}")))?;
        a[(i, i)] = chi2.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }

    // Solve M A^T = L by forward substitution on A (M^T)^T: A W = L^T
    // with W = M^T.
    let w = a
        .solve_lower_triangular(&chol.l().transpose())
        .ok_or(Error::NotPositiveDefinite("Bartlett factor"))?;
    let sigma = w.transpose() * &w;
    // Symmetrise away the last-ulp asymmetry from the matrix product.
    Ok(0.5 * (&sigma + sigma.transpose()))
}
