//! Finite-population sampling.
//!
//! The dynamics work with expected acceptance probabilities. This module
//! draws actual populations, applies the top-n classifier (or its
//! demographic-parity variant) and compares the realized acceptance counts
//! with the binomial moments `m_g·P_g` and `m_g·P_g·(1 − P_g)`.

use rand::distributions::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{is_degenerate, std_normal_quantile, DEGENERATE_MEAN};
use crate::error::{Error, Result};
use crate::scenario::{DistributionSpec, Policy, Scenario};
use crate::threshold::{solve, GroupState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Protected,
    NonProtected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Individual {
    pub group: Group,
    pub score: f64,
}

fn draw(spec: DistributionSpec, mean: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    match spec {
        DistributionSpec::Exponential => {
            if mean < DEGENERATE_MEAN {
                return Ok(0.0);
            }
            let u: f64 = rng.gen();
            Ok(-mean * (1.0 - u).ln())
        }
        DistributionSpec::Pareto { k } => {
            if is_degenerate(spec, mean) {
                return Err(Error::Domain(
                    "cannot sample a pareto group with zero mean".into(),
                ));
            }
            let u: f64 = rng.gen();
            Ok((k - 1.0) / k * mean * (1.0 - u).powf(-1.0 / k))
        }
        DistributionSpec::Gaussian { sigma } => {
            let u: f64 = Open01.sample(rng);
            Ok(mean + sigma * std_normal_quantile(u)?)
        }
    }
}

/// Draw `m_c` protected then `m_nc` non-protected scores by inverse-transform
/// sampling. The same seed always gives the same population.
pub fn sample_population(s: &Scenario, x: GroupState, seed: u64) -> Result<Vec<Individual>> {
    x.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = s.distribution();
    let mut out = Vec::with_capacity(s.m() as usize);
    for _ in 0..s.m_c() {
        out.push(Individual {
            group: Group::Protected,
            score: draw(spec, x.mu_c, &mut rng)?,
        });
    }
    for _ in 0..s.m_nc() {
        out.push(Individual {
            group: Group::NonProtected,
            score: draw(spec, x.mu_nc, &mut rng)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub accepted_c: u64,
    pub accepted_nc: u64,
    /// Protected individuals among the global top n.
    pub true_top_n_in_c: u64,
    /// Share of the population with decision equal to top-n membership.
    pub accuracy: f64,
    /// `|accepted_c/m_c − accepted_nc/m_nc|`
    pub dp_gap: f64,
    pub seed: u64,
}

/// Indices sorted by score, best first; equal scores keep index order.
fn ranking<'a>(pop: &[Individual], members: impl Iterator<Item = usize> + 'a) -> Vec<usize> {
    let mut idx: Vec<usize> = members.collect();
    idx.sort_by(|&a, &b| pop[b].score.total_cmp(&pop[a].score).then(a.cmp(&b)));
    idx
}

/// Seats for the protected group under demographic parity: `n·m_c/m`
/// rounded to nearest, clamped so both groups can fill their share.
pub fn dp_seats(s: &Scenario) -> u64 {
    let ideal = (s.n() as f64 * s.m_c() as f64 / s.m() as f64).round() as u64;
    let low = s.n().saturating_sub(s.m_nc());
    ideal.clamp(low, s.m_c().min(s.n()))
}

/// Sample a population and apply the classifier.
///
/// Shared threshold: accept exactly the global top n, which is the ground
/// truth, so accuracy is 1. Demographic parity: accept the top
/// [`dp_seats`] protected and the top `n − dp_seats` non-protected scores,
/// measured against the global top n.
pub fn run_trial(s: &Scenario, x: GroupState, seed: u64) -> Result<TrialOutcome> {
    let pop = sample_population(s, x, seed)?;
    let m = pop.len();
    let n = s.n() as usize;
    let m_c = s.m_c() as usize;

    let mut truth = vec![false; m];
    for &i in ranking(&pop, 0..m).iter().take(n) {
        truth[i] = true;
    }
    let true_top_n_in_c = truth[..m_c].iter().filter(|&&t| t).count() as u64;

    let accepted = match s.policy() {
        Policy::SharedThreshold => truth.clone(),
        Policy::DemographicParity => {
            let seats_c = dp_seats(s) as usize;
            let mut acc = vec![false; m];
            for &i in ranking(&pop, 0..m_c).iter().take(seats_c) {
                acc[i] = true;
            }
            for &i in ranking(&pop, m_c..m).iter().take(n - seats_c) {
                acc[i] = true;
            }
            acc
        }
    };

    let accepted_c = accepted[..m_c].iter().filter(|&&a| a).count() as u64;
    let accepted_nc = accepted[m_c..].iter().filter(|&&a| a).count() as u64;
    let agree = accepted.iter().zip(&truth).filter(|(a, t)| a == t).count();
    Ok(TrialOutcome {
        accepted_c,
        accepted_nc,
        true_top_n_in_c,
        accuracy: agree as f64 / m as f64,
        dp_gap: (accepted_c as f64 / s.m_c() as f64 - accepted_nc as f64 / s.m_nc() as f64).abs(),
        seed,
    })
}

/// Seed of trial `index`: a SplitMix64 finalizer over the master seed and
/// the index.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(master ^ mix(index))
}

/// Run `trials` independent trials in parallel, in trial order.
pub fn run_trials(
    s: &Scenario,
    x: GroupState,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialOutcome>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(s, x, trial_seed(seed, i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupMoments {
    pub mean: f64,
    /// Population variance over trials.
    pub variance: f64,
    /// `m_g·P_g` from the expected-value model.
    pub expected: f64,
    /// `m_g·P_g·(1 − P_g)`
    pub expected_variance: f64,
    /// `(mean − expected) / sqrt(expected_variance / trials)`
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub seed: u64,
    pub policy: Policy,
    pub p_c: f64,
    pub p_nc: f64,
    pub accepted_c: GroupMoments,
    pub accepted_nc: GroupMoments,
    pub accuracy_mean: f64,
    pub accuracy_min: f64,
    pub dp_gap_mean: f64,
}

fn moments(
    values: impl Iterator<Item = f64> + Clone,
    count: usize,
    size: f64,
    p: f64,
) -> GroupMoments {
    let n = count as f64;
    let mean = values.clone().sum::<f64>() / n;
    let variance = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let expected = size * p;
    let expected_variance = size * p * (1.0 - p);
    let se = (expected_variance / n).sqrt();
    let diff = mean - expected;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    GroupMoments {
        mean,
        variance,
        expected,
        expected_variance,
        z,
    }
}

/// Summarize finished trials against the expected-value model.
pub fn summarize(
    s: &Scenario,
    x: GroupState,
    outcomes: &[TrialOutcome],
    seed: u64,
) -> Result<TrialSummary> {
    if outcomes.is_empty() {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let sol = solve(s, x)?;
    let count = outcomes.len();
    let acc_c = outcomes.iter().map(|o| o.accepted_c as f64);
    let acc_nc = outcomes.iter().map(|o| o.accepted_nc as f64);
    Ok(TrialSummary {
        trials: count,
        seed,
        policy: s.policy(),
        p_c: sol.p_c,
        p_nc: sol.p_nc,
        accepted_c: moments(acc_c, count, s.m_c() as f64, sol.p_c),
        accepted_nc: moments(acc_nc, count, s.m_nc() as f64, sol.p_nc),
        accuracy_mean: outcomes.iter().map(|o| o.accuracy).sum::<f64>() / count as f64,
        accuracy_min: outcomes
            .iter()
            .map(|o| o.accuracy)
            .fold(f64::INFINITY, f64::min),
        dp_gap_mean: outcomes.iter().map(|o| o.dp_gap).sum::<f64>() / count as f64,
    })
}

/// Run and summarize `trials` trials seeded from `seed`.
pub fn aggregate_trials(
    s: &Scenario,
    x: GroupState,
    trials: usize,
    seed: u64,
) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let outcomes = run_trials(s, x, trials, seed)?;
    summarize(s, x, &outcomes, seed)
}
