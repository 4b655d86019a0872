use serde::Serialize;

use crate::dynamics::step;
use crate::error::{Error, Result};
use crate::scenario::{DistributionSpec, Policy, Scenario};
use crate::threshold::GroupState;

/// Residual below which a point counts as a fixed point of the step map.
pub const FIXED_POINT_TOL: f64 = 1e-8;
/// Stand-in for a zero Pareto mean, whose density is undefined.
pub const PARETO_EPSILON: f64 = 1e-12;
/// Iteration cap for [`refine_equilibrium`].
pub const REFINE_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumLabel {
    /// `μ_c = 0`, `μ_nc = β/α · n/m_nc`.
    UndesirableProtectedZero,
    /// `μ_nc = 0`, `μ_c = β/α · n/m_c`.
    UndesirableNonprotectedZero,
    /// Both means at `β/α · n/m` under a shared threshold.
    Desirable,
    /// The single demographic-parity equilibrium.
    DPUnique,
}

impl Serialize for EquilibriumLabel {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl EquilibriumLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquilibriumLabel::UndesirableProtectedZero => "undesirable_protected_zero",
            EquilibriumLabel::UndesirableNonprotectedZero => "undesirable_nonprotected_zero",
            EquilibriumLabel::Desirable => "desirable",
            EquilibriumLabel::DPUnique => "dp_unique",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumSource {
    Analytic,
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub point: GroupState,
    pub label: EquilibriumLabel,
    pub source: EquilibriumSource,
    /// `‖step(point) − point‖_∞`, or infinity if the step failed.
    pub residual: f64,
    /// `residual < FIXED_POINT_TOL`.
    pub verified: bool,
}

fn residual_at(s: &Scenario, x: GroupState) -> f64 {
    step(s, x)
        .map(|next| next.max_norm_distance(&x))
        .unwrap_or(f64::INFINITY)
}

fn zero_mean(spec: DistributionSpec) -> f64 {
    match spec {
        DistributionSpec::Pareto { .. } => PARETO_EPSILON,
        _ => 0.0,
    }
}

/// Closed-form equilibria of the scenario's policy.
///
/// Each point is checked against one application of the step map. Points
/// whose derivation relies on an approximation (the Gaussian axis points,
/// which need a small `σ`, or an axis point with `n ≥ m_g`) may come back
/// with `verified == false`.
pub fn analytic_equilibria(s: &Scenario) -> Result<Vec<Equilibrium>> {
    if s.alpha() == 0.0 {
        return Err(Error::Domain(
            "alpha = 0: means grow without bound, there are no equilibria".into(),
        ));
    }
    let gain = s.beta() / s.alpha();
    let n = s.n() as f64;
    let even = gain * n / s.m() as f64;
    let eps = zero_mean(s.distribution());

    let candidates: Vec<(GroupState, EquilibriumLabel)> = match s.policy() {
        Policy::SharedThreshold => vec![
            (
                GroupState {
                    mu_c: eps,
                    mu_nc: gain * n / s.m_nc() as f64,
                },
                EquilibriumLabel::UndesirableProtectedZero,
            ),
            (
                GroupState {
                    mu_c: gain * n / s.m_c() as f64,
                    mu_nc: eps,
                },
                EquilibriumLabel::UndesirableNonprotectedZero,
            ),
            (
                GroupState {
                    mu_c: even,
                    mu_nc: even,
                },
                EquilibriumLabel::Desirable,
            ),
        ],
        Policy::DemographicParity => {
            vec![(
                GroupState {
                    mu_c: even,
                    mu_nc: even,
                },
                EquilibriumLabel::DPUnique,
            )]
        }
    };

    Ok(candidates
        .into_iter()
        .map(|(point, label)| {
            let residual = residual_at(s, point);
            Equilibrium {
                point,
                label,
                source: EquilibriumSource::Analytic,
                residual,
                verified: residual < FIXED_POINT_TOL,
            }
        })
        .collect())
}

/// Index of the equilibrium closest to `x` in the max-norm.
pub fn nearest(equilibria: &[Equilibrium], x: GroupState) -> Option<(usize, f64)> {
    equilibria
        .iter()
        .enumerate()
        .map(|(i, e)| (i, e.point.max_norm_distance(&x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Polish a guess with damped fixed-point iteration
/// `x ← x + γ·(step(x) − x)`.
///
/// `γ` starts at 1, halves whenever the residual grows and recovers
/// gradually while it shrinks. Damping cannot stabilize a fixed point with
/// an eigenvalue above 1, so guesses near such a point drift off to another
/// equilibrium. The result is labeled by the nearest analytic equilibrium.
pub fn refine_equilibrium(s: &Scenario, guess: GroupState, tol: f64) -> Result<Equilibrium> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!("tol must be > 0, got {tol}")));
    }
    guess.validate()?;
    let analytic = analytic_equilibria(s)?;

    let mut x = guess;
    let mut gamma = 1.0f64;
    let mut prev = f64::INFINITY;
    for _ in 0..REFINE_MAX_ITERATIONS {
        let fx = step(s, x)?;
        let residual = fx.max_norm_distance(&x);
        if residual < tol {
            let (idx, _) = nearest(&analytic, x).expect("at least one analytic equilibrium");
            return Ok(Equilibrium {
                point: x,
                label: analytic[idx].label,
                source: EquilibriumSource::Refined,
                residual,
                verified: residual < FIXED_POINT_TOL,
            });
        }
        gamma = if residual > prev {
            (gamma * 0.5).max(1.0 / 1024.0)
        } else {
            (gamma * 1.25).min(1.0)
        };
        prev = residual;
        x = GroupState {
            mu_c: (x.mu_c + gamma * (fx.mu_c - x.mu_c)).max(0.0),
            mu_nc: (x.mu_nc + gamma * (fx.mu_nc - x.mu_nc)).max(0.0),
        };
    }
    Err(Error::RefineFailed {
        iterations: REFINE_MAX_ITERATIONS,
        residual: residual_at(s, x),
        mu_c: x.mu_c,
        mu_nc: x.mu_nc,
    })
}
