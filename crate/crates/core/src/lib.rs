//! Feedback-loop dynamics of top-n selection.
//!
//! Two groups, a protected group `C` of size `m_c` and the rest `¬C` of size
//! `m_nc`, draw scores from a distribution parameterized by the group mean.
//! Each step the `n` best-scoring individuals are accepted; acceptance adds
//! `β` to an individual's score and everybody loses a fraction `α`. In
//! expectation the group means follow
//!
//! ```text
//! μ_g ← (1 − α)·μ_g + β·P_g
//! ```
//!
//! where `P_g` is the acceptance probability of group `g`. Under a shared
//! threshold `m_c·P_c + m_nc·P_nc = n`; under demographic parity
//! `P_c = P_nc = n/m`.
//!
//! ```
//! use fairloop::{parse_scenario, simulate, GroupState};
//!
//! let s = parse_scenario(r#"{"m_c":100,"m_nc":200,"n":50,"alpha":0.5,"beta":5,
//!     "distribution":{"family":"exponential"}}"#).unwrap();
//! let traj = simulate(&s, GroupState::new(1.0, 2.0).unwrap(), 1000, 1e-12).unwrap();
//! let end = traj.last_state();
//! assert!(end.mu_c < 1e-6 && (end.mu_nc - 2.5).abs() < 1e-6);
//! ```

pub mod analysis;
pub mod distributions;
pub mod dynamics;
mod error;
pub mod export;
pub mod montecarlo;
pub mod scenario;
pub mod threshold;

pub use analysis::{
    analytic_equilibria, basin_map, eigen2, fd_jacobian, instability_condition, phase_field,
    refine_equilibrium, stability_reports, Equilibrium, Grid, JacobianMode, StabilityReport,
};
pub use distributions::{density, inverse_tail, tail_probability};
pub use dynamics::{gap_drift, simulate, step, GapDrift, GapVerdict, Trajectory};
pub use error::{Error, Result};
pub use montecarlo::{aggregate_trials, run_trial, sample_population, TrialOutcome, TrialSummary};
pub use scenario::{parse_scenario, DistributionSpec, Policy, Scenario};
pub use threshold::{
    dp_thresholds, pareto_closed_form_threshold, solve, solve_shared_threshold, GroupState,
    ThresholdSolution,
};
