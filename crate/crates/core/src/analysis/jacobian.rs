use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::equilibria::{Equilibrium, EquilibriumLabel};
use crate::distributions::{std_normal_pdf, std_normal_quantile, tail_probability};
use crate::dynamics::{step, update};
use crate::error::Result;
use crate::scenario::{DistributionSpec, Policy, Scenario};
use crate::threshold::{solve, GroupState};

/// Row-major 2×2 matrix; row 0 is the `μ_c` component of the map.
pub type Matrix2 = [[f64; 2]; 2];

/// Dead band around `|λ| = 1` reported as marginal.
pub const CLASSIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    /// Thresholds are re-solved at every perturbed state.
    Full,
    /// Thresholds stay at their value for the unperturbed state; only the
    /// tail probabilities move.
    ThetaFrozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

fn default_step(mu: f64) -> f64 {
    1e-6f64.max(1e-6 * mu.abs())
}

/// Central-difference Jacobian of the step map.
///
/// `h = None` uses `max(1e-6, 1e-6·|μ|)` per coordinate. A coordinate too
/// close to zero for a backward point falls back to a forward difference,
/// since means cannot be negative. Under demographic parity the acceptance
/// probabilities are `n/m` everywhere, so both modes agree.
pub fn fd_jacobian(
    s: &Scenario,
    x: GroupState,
    mode: JacobianMode,
    h: Option<f64>,
) -> Result<Matrix2> {
    x.validate()?;
    let base = solve(s, x)?;
    let spec = s.distribution();
    let map = |y: GroupState| -> Result<GroupState> {
        match (mode, s.policy()) {
            (JacobianMode::Full, _) | (_, Policy::DemographicParity) => step(s, y),
            (JacobianMode::ThetaFrozen, Policy::SharedThreshold) => {
                let p_c = tail_probability(spec, y.mu_c, base.theta_c)?;
                let p_nc = tail_probability(spec, y.mu_nc, base.theta_nc)?;
                Ok(update(s, y, p_c, p_nc))
            }
        }
    };

    let mut jac = [[0.0; 2]; 2];
    #[allow(clippy::needless_range_loop)]
    for col in 0..2 {
        let coord = if col == 0 { x.mu_c } else { x.mu_nc };
        let hh = h.unwrap_or_else(|| default_step(coord));
        let shift = |d: f64| {
            let mut y = x;
            if col == 0 {
                y.mu_c += d;
            } else {
                y.mu_nc += d;
            }
            y
        };
        let (plus, minus, span) = if coord - hh >= 0.0 {
            (map(shift(hh))?, map(shift(-hh))?, 2.0 * hh)
        } else {
            (map(shift(hh))?, map(x)?, hh)
        };
        jac[0][col] = (plus.mu_c - minus.mu_c) / span;
        jac[1][col] = (plus.mu_nc - minus.mu_nc) / span;
    }
    Ok(jac)
}

/// Closed-form Jacobian at an analytic equilibrium, where one exists.
///
/// * axis points, any family: `(1 − α)·I` (acceptance probabilities are
///   locally constant there);
/// * demographic parity: `(1 − α)·I`;
/// * exponential desirable point: `(1 − α − α·ln(n/m))·I`;
/// * Gaussian desirable point: `(1 − α − (β/σ)·φ(Φ⁻¹(1 − n/m)))·I`;
/// * Pareto desirable point: diagonal `1 − α·(1 + k/m)`, off-diagonals
///   `−α·k·m_nc/m` (row c) and `−α·k·m_c/m` (row nc).
///
/// The Gaussian and Pareto desirable-point forms do not coincide with the
/// derivative of the step map: the Gaussian tail grows with the mean, so the
/// θ-frozen derivative is `1 − α + (β/σ)·φ(·)`, and the re-solved Pareto map
/// has diagonal `1 − α + α·k·m_other/m`. [`fd_jacobian`] reports the
/// derivatives of the map itself.
pub fn analytic_jacobian(s: &Scenario, e: &Equilibrium) -> Option<Matrix2> {
    let alpha = s.alpha();
    let decay = 1.0 - alpha;
    let diag = |d: f64| Some([[d, 0.0], [0.0, d]]);
    match e.label {
        EquilibriumLabel::DPUnique
        | EquilibriumLabel::UndesirableProtectedZero
        | EquilibriumLabel::UndesirableNonprotectedZero => diag(decay),
        EquilibriumLabel::Desirable => {
            let rate = s.acceptance_rate();
            let m = s.m() as f64;
            match s.distribution() {
                DistributionSpec::Exponential => diag(decay - alpha * rate.ln()),
                DistributionSpec::Gaussian { sigma } => {
                    let z = std_normal_quantile(1.0 - rate).ok()?;
                    diag(decay - s.beta() / sigma * std_normal_pdf(z))
                }
                DistributionSpec::Pareto { k } => {
                    let d = 1.0 - alpha * (1.0 + k / m);
                    Some([
                        [d, -alpha * k * s.m_nc() as f64 / m],
                        [-alpha * k * s.m_c() as f64 / m, d],
                    ])
                }
            }
        }
    }
}

/// Eigenvalues of a 2×2 matrix, largest magnitude first.
///
/// Roots of `λ² − tr·λ + det`. The discriminant is formed as
/// `((a − d)/2)² + b·c` and the smaller real root is recovered from
/// `det / λ₁` to avoid cancellation.
pub fn eigen2(m: &Matrix2) -> [Complex64; 2] {
    let [[a, b], [c, d]] = *m;
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    let det = a * d - b * c;
    let mut roots = if disc >= 0.0 {
        let root = disc.sqrt();
        let big = if half_tr >= 0.0 {
            half_tr + root
        } else {
            half_tr - root
        };
        let small = if big != 0.0 {
            det / big
        } else {
            half_tr - root
        };
        [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let im = (-disc).sqrt();
        [Complex64::new(half_tr, im), Complex64::new(half_tr, -im)]
    };
    if roots[1].norm() > roots[0].norm() {
        roots.swap(0, 1);
    }
    roots
}

/// Spectral radius of a 2×2 matrix.
pub fn spectral_radius(m: &Matrix2) -> f64 {
    eigen2(m)[0].norm()
}

/// Stable iff every `|λ| < 1 − tol`, unstable iff some `|λ| > 1 + tol`.
pub fn classify(eigenvalues: &[Complex64; 2], tol: f64) -> Verdict {
    let radius = eigenvalues[0].norm().max(eigenvalues[1].norm());
    if radius < 1.0 - tol {
        Verdict::Stable
    } else if radius > 1.0 + tol {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    }
}
