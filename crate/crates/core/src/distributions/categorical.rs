use rand::Rng;

use crate::{Error, Result};

/// Draw an index proportional to `weights`, consuming exactly one uniform.
///
/// Weights must be finite and non-negative with a positive sum; they need
/// not be normalised.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let mut total = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::invalid(format!(
                "categorical weight {i} is {w}; weights must be finite and non-negative"
            )));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::invalid(
            "categorical weights sum to zero".to_string(),
        ));
    }

    let u = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        cum += w;
        if u < cum {
            return Ok(i);
        }
    }
    // Rounding in the cumulative sum can leave u a hair past the total;
    // attribute that sliver to the last non-zero weight.
    Ok(last_positive)
}
