use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::equilibria::{analytic_equilibria, nearest, Equilibrium};
use crate::dynamics::{simulate, step};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::threshold::GroupState;

/// Uniform square grid over `[0, mu_max]²` with `resolution` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub mu_max: f64,
    pub resolution: usize,
}

impl Grid {
    pub fn new(mu_max: f64, resolution: usize) -> Result<Grid> {
        if resolution < 2 {
            return Err(Error::Domain(format!(
                "grid resolution must be >= 2, got {resolution}"
            )));
        }
        if !(mu_max.is_finite() && mu_max > 0.0) {
            return Err(Error::Domain(format!(
                "grid mu_max must be > 0, got {mu_max}"
            )));
        }
        Ok(Grid { mu_max, resolution })
    }

    /// Grid points in output order: `mu_c` outer, `mu_nc` inner.
    pub fn points(&self) -> Vec<GroupState> {
        let last = (self.resolution - 1) as f64;
        let coord = |i: usize| self.mu_max * i as f64 / last;
        (0..self.resolution)
            .flat_map(|i| {
                (0..self.resolution).map(move |j| GroupState {
                    mu_c: coord(i),
                    mu_nc: coord(j),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasinCell {
    pub start: GroupState,
    /// Index into [`BasinMap::attractors`]; `None` when the run did not
    /// settle on a known equilibrium.
    pub attractor: Option<usize>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinMap {
    pub attractors: Vec<Equilibrium>,
    pub cells: Vec<BasinCell>,
}

/// Simulate from every grid point and label it with the equilibrium it
/// settles on.
///
/// A run counts as settled when a step moves the state by less than
/// `tol·1e-3`; it is then labeled with the nearest analytic equilibrium if
/// that lies within `tol`. Cells are processed in parallel and returned in
/// grid order.
pub fn basin_map(s: &Scenario, grid: Grid, max_steps: usize, tol: f64) -> BasinMap {
    let attractors = analytic_equilibria(s).unwrap_or_default();
    let step_tol = tol * 1e-3;
    let cells = grid
        .points()
        .into_par_iter()
        .map(|start| {
            let run = simulate(s, start, max_steps, step_tol);
            match run {
                Ok(traj) => {
                    let end = traj.last_state();
                    let attractor = if traj.converged {
                        nearest(&attractors, end)
                            .filter(|&(_, dist)| dist < tol)
                            .map(|(i, _)| i)
                    } else {
                        None
                    };
                    BasinCell {
                        start,
                        attractor,
                        steps: traj.records.len() - 1,
                    }
                }
                Err(_) => BasinCell {
                    start,
                    attractor: None,
                    steps: 0,
                },
            }
        })
        .collect();
    BasinMap { attractors, cells }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRow {
    pub mu_c: f64,
    pub mu_nc: f64,
    pub u: f64,
    pub v: f64,
    /// False when the step could not be evaluated; `u = v = 0` then.
    pub ok: bool,
}

/// One-step displacement `step(x) − x` at every grid point.
pub fn phase_field(s: &Scenario, grid: Grid) -> Vec<PhaseRow> {
    grid.points()
        .into_par_iter()
        .map(|x| match step(s, x) {
            Ok(next) => PhaseRow {
                mu_c: x.mu_c,
                mu_nc: x.mu_nc,
                u: next.mu_c - x.mu_c,
                v: next.mu_nc - x.mu_nc,
                ok: true,
            },
            Err(_) => PhaseRow {
                mu_c: x.mu_c,
                mu_nc: x.mu_nc,
                u: 0.0,
                v: 0.0,
                ok: false,
            },
        })
        .collect()
}
