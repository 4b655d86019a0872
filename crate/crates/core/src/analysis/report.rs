use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::criteria::{instability_condition, InstabilityCriterion};
use crate::analysis::equilibria::{analytic_equilibria, Equilibrium, EquilibriumLabel};
use crate::analysis::jacobian::{
    analytic_jacobian, classify, eigen2, fd_jacobian, JacobianMode, Matrix2, Verdict, CLASSIFY_TOL,
};
use crate::error::Result;
use crate::scenario::{DistributionSpec, Policy, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

impl From<Complex64> for Eigenvalue {
    fn from(c: Complex64) -> Self {
        Eigenvalue {
            re: c.re,
            im: c.im,
            modulus: c.norm(),
        }
    }
}

/// A Jacobian together with its spectrum and stability verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub matrix: Matrix2,
    pub eigenvalues: [Eigenvalue; 2],
    pub verdict: Verdict,
}

impl SpectrumEntry {
    pub fn new(matrix: Matrix2) -> Self {
        let eig = eigen2(&matrix);
        SpectrumEntry {
            matrix,
            eigenvalues: [eig[0].into(), eig[1].into()],
            verdict: classify(&eig, CLASSIFY_TOL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub equilibrium: Equilibrium,
    /// Finite differences with thresholds re-solved; governs the verdict
    /// for the coupled map.
    pub jacobian_fd: Option<SpectrumEntry>,
    /// Finite differences with thresholds held at the equilibrium value.
    pub jacobian_theta_frozen: Option<SpectrumEntry>,
    pub jacobian_analytic: Option<SpectrumEntry>,
    /// Closed-form instability predicate, for the desirable shared point.
    pub criterion: Option<InstabilityCriterion>,
    pub notes: Vec<String>,
}

/// Stability analysis of one equilibrium.
pub fn stability_report(s: &Scenario, e: &Equilibrium) -> StabilityReport {
    let mut notes = Vec::new();
    let fd = |mode| {
        fd_jacobian(s, e.point, mode, None)
            .ok()
            .map(SpectrumEntry::new)
    };
    let jacobian_fd = fd(JacobianMode::Full);
    let jacobian_theta_frozen = fd(JacobianMode::ThetaFrozen);
    if jacobian_fd.is_none() {
        notes.push("full finite-difference Jacobian unavailable (solver failure)".into());
    }
    if jacobian_theta_frozen.is_none() {
        notes.push("theta-frozen finite-difference Jacobian unavailable (solver failure)".into());
    }
    let jacobian_analytic = analytic_jacobian(s, e).map(SpectrumEntry::new);

    let criterion = (e.label == EquilibriumLabel::Desirable).then(|| instability_condition(s));

    if !e.verified {
        notes.push(format!(
            "step residual {:e} exceeds the fixed-point tolerance; closed-form point is approximate here",
            e.residual
        ));
    }
    if e.label == EquilibriumLabel::Desirable {
        match s.distribution() {
            DistributionSpec::Pareto { .. } => notes.push(
                "closed-form Pareto matrix: both eigenvalues are computed from the matrix \
                 (a ± sqrt(b·c)); the re-solved map differs from this matrix, compare jacobian_fd"
                    .into(),
            ),
            DistributionSpec::Gaussian { .. } => notes.push(
                "closed-form Gaussian diagonal uses 1 − α − (β/σ)·φ; the θ-frozen derivative of the map \
                 is 1 − α + (β/σ)·φ, compare jacobian_theta_frozen"
                    .into(),
            ),
            DistributionSpec::Exponential => {}
        }
    }
    if s.distribution().infinite_variance() {
        notes.push("pareto k <= 2: infinite variance".into());
    }
    if s.capacity_warning() {
        notes.push("n >= m_c/5: expected-count approximation is loose".into());
    }

    StabilityReport {
        equilibrium: *e,
        jacobian_fd,
        jacobian_theta_frozen,
        jacobian_analytic,
        criterion,
        notes,
    }
}

/// Reports for every analytic equilibrium of the scenario.
pub fn stability_reports(s: &Scenario) -> Result<Vec<StabilityReport>> {
    Ok(analytic_equilibria(s)?
        .iter()
        .map(|e| stability_report(s, e))
        .collect())
}

/// Whether a report describes the shared-threshold desirable point.
pub fn is_shared_desirable(s: &Scenario, r: &StabilityReport) -> bool {
    s.policy() == Policy::SharedThreshold && r.equilibrium.label == EquilibriumLabel::Desirable
}
