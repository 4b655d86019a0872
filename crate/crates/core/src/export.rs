//! CSV artifacts.
//!
//! Floats are written with Rust's `Display`, which is the shortest decimal
//! that parses back to the same `f64`, so reruns diff cleanly.

use std::io::{self, Write};

use crate::analysis::{BasinMap, Equilibrium, PhaseRow};
use crate::dynamics::Trajectory;
use crate::montecarlo::TrialOutcome;

pub const TRAJECTORY_HEADER: &str = "t,mu_c,mu_nc,theta_c,theta_nc,P_c,P_nc,eta";
pub const PHASE_HEADER: &str = "mu_c,mu_nc,u,v,flag";
pub const BASIN_HEADER: &str = "mu_c,mu_nc,attractor,steps";
pub const TRIALS_HEADER: &str = "trial,accepted_c,accepted_nc,accuracy,dp_gap";
pub const EQUILIBRIA_HEADER: &str = "mu_c,mu_nc,label,source,residual";

pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for r in &traj.records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.t, r.state.mu_c, r.state.mu_nc, r.theta_c, r.theta_nc, r.p_c, r.p_nc, r.eta
        )?;
    }
    Ok(())
}

/// `flag` is `ok` or `unsolvable`; unsolvable rows carry `u = v = 0`.
pub fn write_phase<W: Write>(mut w: W, rows: &[PhaseRow]) -> io::Result<()> {
    writeln!(w, "{PHASE_HEADER}")?;
    for r in rows {
        let flag = if r.ok { "ok" } else { "unsolvable" };
        writeln!(w, "{},{},{},{},{}", r.mu_c, r.mu_nc, r.u, r.v, flag)?;
    }
    Ok(())
}

/// `attractor` is the equilibrium label, or `none`.
pub fn write_basin<W: Write>(mut w: W, map: &BasinMap) -> io::Result<()> {
    writeln!(w, "{BASIN_HEADER}")?;
    for c in &map.cells {
        let label = c
            .attractor
            .map(|i| map.attractors[i].label.as_str())
            .unwrap_or("none");
        writeln!(
            w,
            "{},{},{},{}",
            c.start.mu_c, c.start.mu_nc, label, c.steps
        )?;
    }
    Ok(())
}

pub fn write_trials<W: Write>(mut w: W, outcomes: &[TrialOutcome]) -> io::Result<()> {
    writeln!(w, "{TRIALS_HEADER}")?;
    for (i, o) in outcomes.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            i, o.accepted_c, o.accepted_nc, o.accuracy, o.dp_gap
        )?;
    }
    Ok(())
}

pub fn write_equilibria<W: Write>(mut w: W, eqs: &[Equilibrium]) -> io::Result<()> {
    writeln!(w, "{EQUILIBRIA_HEADER}")?;
    for e in eqs {
        let source = match e.source {
            crate::analysis::EquilibriumSource::Analytic => "analytic",
            crate::analysis::EquilibriumSource::Refined => "refined",
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            e.point.mu_c,
            e.point.mu_nc,
            e.label.as_str(),
            source,
            e.residual
        )?;
    }
    Ok(())
}
