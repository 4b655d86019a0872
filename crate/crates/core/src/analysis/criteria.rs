use serde::Serialize;

use crate::distributions::{std_normal_pdf, std_normal_quantile};
use crate::scenario::{DistributionSpec, Scenario};

/// One closed-form instability predicate for the desirable shared-threshold
/// equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub holds: bool,
    /// Signed distance to the boundary, positive when the predicate holds.
    pub margin: f64,
    /// Boundary value of the compared quantity.
    pub boundary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityCriterion {
    pub family: &'static str,
    /// True if any condition holds.
    pub holds: bool,
    pub conditions: Vec<Condition>,
}

/// Evaluate the family's closed-form instability predicate(s).
///
/// * exponential: `n/m < 1/e`, margin `1/e − n/m`;
/// * Pareto: `k > m/(√(m_c m_nc) − 1)` (`λ₁ > 1`) and
///   `k > (2/α − 1)·m/(√(m_c m_nc) + 1)` (`λ₂ < −1`), margins in units of `k`;
/// * Gaussian: `σ < β/(2 − α)·φ(Φ⁻¹(1 − n/m))`, margin in units of `σ`.
pub fn instability_condition(s: &Scenario) -> InstabilityCriterion {
    let rate = s.acceptance_rate();
    let m = s.m() as f64;
    let conditions = match s.distribution() {
        DistributionSpec::Exponential => {
            let boundary = (-1.0f64).exp();
            vec![Condition {
                name: "n/m < 1/e",
                holds: rate < boundary,
                margin: boundary - rate,
                boundary,
            }]
        }
        DistributionSpec::Pareto { k } => {
            let geo = (s.m_c() as f64 * s.m_nc() as f64).sqrt();
            let first = if geo > 1.0 {
                m / (geo - 1.0)
            } else {
                f64::INFINITY
            };
            let second = if s.alpha() > 0.0 {
                (2.0 / s.alpha() - 1.0) * m / (geo + 1.0)
            } else {
                f64::INFINITY
            };
            vec![
                Condition {
                    name: "k > m/(sqrt(m_c*m_nc) - 1)",
                    holds: k > first,
                    margin: k - first,
                    boundary: first,
                },
                Condition {
                    name: "k > (2/alpha - 1)*m/(sqrt(m_c*m_nc) + 1)",
                    holds: k > second,
                    margin: k - second,
                    boundary: second,
                },
            ]
        }
        DistributionSpec::Gaussian { sigma } => {
            let boundary = match std_normal_quantile(1.0 - rate) {
                Ok(z) => s.beta() / (2.0 - s.alpha()) * std_normal_pdf(z),
                Err(_) => 0.0,
            };
            vec![Condition {
                name: "sigma < beta/(2 - alpha)*phi(Phi^-1(1 - n/m))",
                holds: sigma < boundary,
                margin: boundary - sigma,
                boundary,
            }]
        }
    };
    InstabilityCriterion {
        family: s.distribution().name(),
        holds: conditions.iter().any(|c| c.holds),
        conditions,
    }
}
