//! Mean-parameterized score distributions.
//!
//! All three families are described by their mean `μ` plus at most one shape
//! parameter. The Pareto scale is `x_m = (k − 1)/k · μ`, so its support
//! starts at `x_m`.
//!
//! A mean below [`DEGENERATE_MEAN`] is treated as the point mass at zero for
//! the exponential and Pareto families: every score is 0, so the tail is 1
//! for `θ ≤ 0` and 0 above. The Gaussian mean is a location and has no such
//! limit.

mod normal;

pub use normal::{erfc, std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf};

use crate::error::{Error, Result};
use crate::scenario::DistributionSpec;

/// Means below this are the degenerate point mass at zero.
pub const DEGENERATE_MEAN: f64 = 1e-12;

fn check_mean(mean: f64) -> Result<()> {
    if mean.is_finite() && mean >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "mean must be finite and >= 0, got {mean}"
        )))
    }
}

/// Whether `mean` collapses the family to a point mass at zero.
pub fn is_degenerate(spec: DistributionSpec, mean: f64) -> bool {
    !matches!(spec, DistributionSpec::Gaussian { .. }) && mean < DEGENERATE_MEAN
}

/// Smallest score with positive density.
pub fn support_min(spec: DistributionSpec, mean: f64) -> f64 {
    match spec {
        DistributionSpec::Exponential => 0.0,
        DistributionSpec::Pareto { k } => (k - 1.0) / k * mean,
        DistributionSpec::Gaussian { .. } => f64::NEG_INFINITY,
    }
}

/// `P(q ≥ θ)` for a score `q` drawn with the given mean.
pub fn tail_probability(spec: DistributionSpec, mean: f64, theta: f64) -> Result<f64> {
    spec.validate()?;
    check_mean(mean)?;
    if theta.is_nan() {
        return Err(Error::Domain("threshold is NaN".into()));
    }
    if is_degenerate(spec, mean) {
        return Ok(if theta <= 0.0 { 1.0 } else { 0.0 });
    }
    let p = match spec {
        DistributionSpec::Exponential => {
            if theta <= 0.0 {
                1.0
            } else {
                (-theta / mean).exp()
            }
        }
        DistributionSpec::Pareto { k } => {
            let scale = (k - 1.0) / k * mean;
            if theta <= scale {
                1.0
            } else {
                (scale / theta).powf(k)
            }
        }
        DistributionSpec::Gaussian { sigma } => std_normal_sf((theta - mean) / sigma),
    };
    Ok(p.clamp(0.0, 1.0))
}

/// The threshold whose tail probability is `p`.
pub fn inverse_tail(spec: DistributionSpec, mean: f64, p: f64) -> Result<f64> {
    spec.validate()?;
    check_mean(mean)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!(
            "tail probability must be in (0,1], got {p}"
        )));
    }
    if is_degenerate(spec, mean) {
        return Err(Error::Domain(
            "a zero-mean group has no threshold with positive tail".into(),
        ));
    }
    Ok(match spec {
        DistributionSpec::Exponential => -mean * p.ln(),
        DistributionSpec::Pareto { k } => (k - 1.0) / k * mean * p.powf(-1.0 / k),
        DistributionSpec::Gaussian { sigma } => {
            if p == 1.0 {
                f64::NEG_INFINITY
            } else {
                // Φ⁻¹(1 − p) = −Φ⁻¹(p), without rounding 1 − p
                mean - sigma * std_normal_quantile(p)?
            }
        }
    })
}

/// Score density at `q`.
pub fn density(spec: DistributionSpec, mean: f64, q: f64) -> Result<f64> {
    spec.validate()?;
    check_mean(mean)?;
    if is_degenerate(spec, mean) {
        return Err(Error::Domain("density undefined for a zero mean".into()));
    }
    Ok(match spec {
        DistributionSpec::Exponential => {
            if q < 0.0 {
                0.0
            } else {
                (-q / mean).exp() / mean
            }
        }
        DistributionSpec::Pareto { k } => {
            let scale = (k - 1.0) / k * mean;
            if q < scale {
                0.0
            } else {
                k * scale.powf(k) / q.powf(k + 1.0)
            }
        }
        DistributionSpec::Gaussian { sigma } => std_normal_pdf((q - mean) / sigma) / sigma,
    })
}
