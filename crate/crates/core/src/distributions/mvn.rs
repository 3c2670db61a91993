use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Mean and covariance of a multivariate normal.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnParams {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl MvnParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() != mean.len() {
            return Err(Error::invalid(format!(
                "mvn dimension mismatch: mean {} vs cov {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(MvnParams { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Draw from `MVN(mean, cov)` via the Cholesky factor: `mean + L z`.
pub fn sample_mvn<R: Rng + ?Sized>(params: &MvnParams, rng: &mut R) -> Result<DVector<f64>> {
    let chol = Cholesky::new(params.cov.clone())
        .ok_or(Error::NotPositiveDefinite("sample_mvn covariance"))?;
    Ok(sample_mvn_prechol(&params.mean, &chol, rng))
}

/// Sampling path for callers that already hold the Cholesky factor.
pub(crate) fn sample_mvn_prechol<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    chol: &Cholesky<f64, Dyn>,
    rng: &mut R,
) -> DVector<f64> {
    let k = mean.len();
    let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + chol.l() * z
}
