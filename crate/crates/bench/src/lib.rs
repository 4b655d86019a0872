//! Fixtures shared by the benchmarks.

use fairloop::{DistributionSpec, GroupState, Policy, Scenario};

/// 100 protected, 200 non-protected, 50 seats, α = 0.5, β = 5.
pub fn reference(distribution: DistributionSpec, policy: Policy) -> Scenario {
    Scenario::new(100, 200, 50, 0.5, 5.0, distribution, policy).expect("valid reference scenario")
}

pub fn state(mu_c: f64, mu_nc: f64) -> GroupState {
    GroupState::new(mu_c, mu_nc).expect("valid state")
}
