//! Acceptance thresholds for the current group means.
//!
//! Under [`Policy::SharedThreshold`] one cut-off `θ` is chosen so that the
//! expected number of acceptances `m_c·P_c(θ) + m_nc·P_nc(θ)` equals `n`.
//! Under [`Policy::DemographicParity`] each group gets its own cut-off and
//! both acceptance rates equal `n / m`.

use serde::Serialize;

use crate::distributions::{inverse_tail, is_degenerate, support_min, tail_probability};
use crate::error::{Error, Result};
use crate::scenario::{DistributionSpec, Policy, Scenario};

/// Relative tolerance on `|T(θ) − n| / n` that counts as solved.
pub const CAPACITY_TOL: f64 = 1e-9;
/// Iteration cap of the bracketing solver.
pub const MAX_ITERATIONS: usize = 200;

/// Mean scores of the protected and non-protected group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupState {
    pub mu_c: f64,
    pub mu_nc: f64,
}

impl GroupState {
    pub fn new(mu_c: f64, mu_nc: f64) -> Result<Self> {
        let state = GroupState { mu_c, mu_nc };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu_c", self.mu_c), ("mu_nc", self.mu_nc)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Score gap `η = μ_nc − μ_c`.
    pub fn gap(&self) -> f64 {
        self.mu_nc - self.mu_c
    }

    /// The state with group labels exchanged.
    pub fn swapped(&self) -> GroupState {
        GroupState {
            mu_c: self.mu_nc,
            mu_nc: self.mu_c,
        }
    }

    pub fn max_norm_distance(&self, other: &GroupState) -> f64 {
        (self.mu_c - other.mu_c)
            .abs()
            .max((self.mu_nc - other.mu_nc).abs())
    }
}

/// Thresholds and the acceptance probabilities they induce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSolution {
    pub theta_c: f64,
    pub theta_nc: f64,
    pub p_c: f64,
    pub p_nc: f64,
    /// `|m_c·P_c + m_nc·P_nc − n|`
    pub residual: f64,
    pub policy: Policy,
    /// Demographic parity only: the group has zero mean, so no threshold
    /// reaches `P = n/m`. Its threshold is reported at the support minimum
    /// while `P = n/m` is still used by the dynamics.
    pub unreachable_c: bool,
    pub unreachable_nc: bool,
    pub iterations: usize,
}

/// Solve for the threshold(s) according to the scenario's policy.
pub fn solve(s: &Scenario, x: GroupState) -> Result<ThresholdSolution> {
    match s.policy() {
        Policy::SharedThreshold => solve_shared_threshold(s, x),
        Policy::DemographicParity => dp_thresholds(s, x),
    }
}

/// Expected number of acceptances at a common threshold.
pub fn expected_acceptances(s: &Scenario, x: GroupState, theta: f64) -> Result<f64> {
    let spec = s.distribution();
    Ok(s.m_c() as f64 * tail_probability(spec, x.mu_c, theta)?
        + s.m_nc() as f64 * tail_probability(spec, x.mu_nc, theta)?)
}

/// Common threshold with `m_c·P_c + m_nc·P_nc = n`.
///
/// `T(θ)` is non-increasing, so the root is bracketed between the lowest
/// support point and a doubling search upward, then narrowed with
/// Illinois-modified regula falsi. A bisection step is forced whenever the
/// bracket fails to halve.
pub fn solve_shared_threshold(s: &Scenario, x: GroupState) -> Result<ThresholdSolution> {
    x.validate()?;
    let spec = s.distribution();
    if is_degenerate(spec, x.mu_c) && is_degenerate(spec, x.mu_nc) {
        return Err(Error::DegenerateState);
    }
    let n = s.n() as f64;
    let f = |theta: f64| -> Result<f64> { Ok(expected_acceptances(s, x, theta)? - n) };

    let mean_hi = x.mu_c.max(x.mu_nc);
    let (lo0, width0) = match spec {
        DistributionSpec::Exponential => (0.0, mean_hi),
        DistributionSpec::Pareto { .. } => {
            let lo = support_min(spec, x.mu_c).min(support_min(spec, x.mu_nc));
            (lo, mean_hi)
        }
        DistributionSpec::Gaussian { sigma } => {
            (x.mu_c.min(x.mu_nc) - 12.0 * sigma, mean_hi.max(sigma))
        }
    };

    let mut lo = lo0;
    let mut f_lo = f(lo)?;
    // n < m and every family has full mass at or above `lo`
    debug_assert!(f_lo > 0.0);

    let mut width = width0.max(f64::MIN_POSITIVE);
    let mut hi = lo + width;
    let mut f_hi = f(hi)?;
    let mut doublings = 0;
    while f_hi >= 0.0 {
        if f_hi == 0.0 {
            return finish_shared(s, x, hi, doublings);
        }
        lo = hi;
        f_lo = f_hi;
        width *= 2.0;
        hi = lo0 + width;
        f_hi = f(hi)?;
        doublings += 1;
        if doublings > 2100 || !hi.is_finite() {
            return Err(Error::NoConvergence {
                iterations: doublings,
                lo,
                hi,
                residual: f_hi.abs(),
            });
        }
    }

    // well past CAPACITY_TOL: finite-difference Jacobians divide solver noise by h
    let target = 1e-14 * n;
    let mut best = if f_lo.abs() < f_hi.abs() { lo } else { hi };
    let mut best_f = f_lo.abs().min(f_hi.abs());
    // end replaced on the previous iteration: -1 lo, +1 hi
    let mut side = 0i8;
    let mut last_width = hi - lo;

    for iter in 1..=MAX_ITERATIONS {
        let mut theta = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(theta > lo && theta < hi) || (iter > 1 && (hi - lo) > 0.5 * last_width) {
            theta = 0.5 * (lo + hi);
        }
        last_width = hi - lo;

        let ft = f(theta)?;
        if ft.abs() < best_f {
            best = theta;
            best_f = ft.abs();
        }
        if best_f <= target || theta <= lo || theta >= hi {
            return finish_shared(s, x, best, iter);
        }
        if ft > 0.0 {
            lo = theta;
            f_lo = ft;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = theta;
            f_hi = ft;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }

    if best_f <= CAPACITY_TOL * n {
        return finish_shared(s, x, best, MAX_ITERATIONS);
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        lo,
        hi,
        residual: best_f,
    })
}

fn finish_shared(
    s: &Scenario,
    x: GroupState,
    theta: f64,
    iterations: usize,
) -> Result<ThresholdSolution> {
    let spec = s.distribution();
    let p_c = tail_probability(spec, x.mu_c, theta)?;
    let p_nc = tail_probability(spec, x.mu_nc, theta)?;
    let n = s.n() as f64;
    let residual = (s.m_c() as f64 * p_c + s.m_nc() as f64 * p_nc - n).abs();
    if residual > CAPACITY_TOL * n {
        return Err(Error::NoConvergence {
            iterations,
            lo: theta,
            hi: theta,
            residual,
        });
    }
    Ok(ThresholdSolution {
        theta_c: theta,
        theta_nc: theta,
        p_c,
        p_nc,
        residual,
        policy: Policy::SharedThreshold,
        unreachable_c: false,
        unreachable_nc: false,
        iterations,
    })
}

/// Group-specific thresholds with `P_c = P_nc = n/m`.
pub fn dp_thresholds(s: &Scenario, x: GroupState) -> Result<ThresholdSolution> {
    x.validate()?;
    let spec = s.distribution();
    let rate = s.acceptance_rate();
    let group = |mean: f64| -> Result<(f64, bool)> {
        if is_degenerate(spec, mean) {
            Ok((support_min(spec, mean), true))
        } else {
            Ok((inverse_tail(spec, mean, rate)?, false))
        }
    };
    let (theta_c, unreachable_c) = group(x.mu_c)?;
    let (theta_nc, unreachable_nc) = group(x.mu_nc)?;
    let residual = (s.m_c() as f64 * rate + s.m_nc() as f64 * rate - s.n() as f64).abs();
    Ok(ThresholdSolution {
        theta_c,
        theta_nc,
        p_c: rate,
        p_nc: rate,
        residual,
        policy: Policy::DemographicParity,
        unreachable_c,
        unreachable_nc,
        iterations: 0,
    })
}

/// Closed-form Pareto threshold and acceptance probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoClosedForm {
    pub theta: f64,
    pub p_c: f64,
    pub p_nc: f64,
    /// The formula assumes `θ` lies at or above both support minima.
    pub valid: bool,
}

/// `θ = (k−1)/k · ((m_c μ_c^k + m_nc μ_nc^k)/n)^{1/k}` with
/// `P_g = n μ_g^k / (m_c μ_c^k + m_nc μ_nc^k)`.
pub fn pareto_closed_form_threshold(s: &Scenario, x: GroupState) -> Result<ParetoClosedForm> {
    x.validate()?;
    let k = match s.distribution() {
        DistributionSpec::Pareto { k } => k,
        other => {
            return Err(Error::Domain(format!(
                "closed-form threshold needs the pareto family, got {}",
                other.name()
            )))
        }
    };
    let top = x.mu_c.max(x.mu_nc);
    if top <= 0.0 {
        return Err(Error::DegenerateState);
    }
    // normalize by the larger mean so μ^k cannot overflow
    let w_c = (x.mu_c / top).powf(k);
    let w_nc = (x.mu_nc / top).powf(k);
    let n = s.n() as f64;
    let weight = s.m_c() as f64 * w_c + s.m_nc() as f64 * w_nc;
    let theta = (k - 1.0) / k * top * (weight / n).powf(1.0 / k);
    let p_c = n * w_c / weight;
    let p_nc = n * w_nc / weight;
    let floor = (k - 1.0) / k;
    let valid = theta >= floor * x.mu_c && theta >= floor * x.mu_nc;
    Ok(ParetoClosedForm {
        theta,
        p_c,
        p_nc,
        valid,
    })
}
