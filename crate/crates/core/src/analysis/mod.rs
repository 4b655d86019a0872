//! Equilibria, Jacobians and stability of the step map, plus grid scans
//! (basins of attraction and the one-step phase field).
//!
//! Jacobians come in two finite-difference flavours. [`JacobianMode::Full`]
//! re-solves the thresholds at every perturbed state and is the derivative
//! of the actual coupled map. [`JacobianMode::ThetaFrozen`] keeps the
//! thresholds at their unperturbed value, which is the setting the closed
//! forms in [`analytic_jacobian`] are written for. The two are never mixed.

mod criteria;
mod equilibria;
mod grid;
mod jacobian;
mod report;

pub use criteria::{instability_condition, Condition, InstabilityCriterion};
pub use equilibria::{
    analytic_equilibria, nearest, refine_equilibrium, Equilibrium, EquilibriumLabel,
    EquilibriumSource, FIXED_POINT_TOL, PARETO_EPSILON, REFINE_MAX_ITERATIONS,
};
pub use grid::{basin_map, phase_field, BasinCell, BasinMap, Grid, PhaseRow};
pub use jacobian::{
    analytic_jacobian, classify, eigen2, fd_jacobian, spectral_radius, JacobianMode, Matrix2,
    Verdict, CLASSIFY_TOL,
};
pub use report::{
    is_shared_desirable, stability_report, stability_reports, Eigenvalue, SpectrumEntry,
    StabilityReport,
};
