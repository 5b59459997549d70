//! Shared instance builders for the benchmark targets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uav_tsptw::channel::ChannelParams;
use uav_tsptw::energy::PowerModelParams;
use uav_tsptw::planner::PlanningCosts;
use uav_tsptw::scenario::{GroundUser, Scenario, UavParams};

/// Random scenario in a 400 m square with the reference link setup.
pub fn random_scenario(k: usize, eta_range: (f64, f64), v_max: f64, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = (0..k)
        .map(|i| GroundUser {
            id: i + 1,
            position: [rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)],
            data_bits: 1.0e7,
            deadline_s: rng.random_range(eta_range.0..eta_range.1),
        })
        .collect();
    Scenario::new(
        [1.5, 398.0],
        users,
        UavParams {
            altitude_m: 50.0,
            v_max,
            delta_v: v_max,
            v_hover: 10.2,
            p_com_w: 5.0,
            energy_budget_j: 5.0e5,
        },
        ChannelParams::paper_defaults(),
        PowerModelParams::default(),
    )
    .unwrap()
}

/// Planning costs for a fully feasible instance (no deadline pruning), the
/// worst case for every search.
pub fn feasible_costs(k: usize, seed: u64) -> PlanningCosts {
    let s = random_scenario(k, (1.0e6, 2.0e6), 50.0, seed);
    PlanningCosts::from_scenario(&s).unwrap()
}
