//! Problem instance data: ground users, UAV parameters, and the derived
//! distance / travel-time matrices shared by every solver.
//!
//! Node indexing convention: index `0` is the depot, users occupy `1..=K`.
//! Planning is two-dimensional; the flight altitude only enters the channel
//! model and is carried in [`UavParams`].

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::energy::PowerModelParams;
use crate::error::{Error, Result};

/// One ground user: position, requested content size, and deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundUser {
    /// User index, unique within a scenario, `1..=K`.
    pub id: usize,
    /// Planar position in meters.
    pub position: [f64; 2],
    /// Requested content size in bits.
    pub data_bits: f64,
    /// Requested timeout: the user must be fully served within this many
    /// seconds from mission start.
    pub deadline_s: f64,
}

/// UAV platform parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavParams {
    /// Constant flight altitude in meters.
    pub altitude_m: f64,
    /// Maximum cruise speed in m/s.
    pub v_max: f64,
    /// Maximum speed change between consecutive hops in m/s.
    pub delta_v: f64,
    /// Circling speed while serving a user, in m/s. Hover power is evaluated
    /// at this speed.
    pub v_hover: f64,
    /// Transmit power in watts.
    pub p_com_w: f64,
    /// Total propulsion + communication energy budget in joules.
    pub energy_budget_j: f64,
}

impl UavParams {
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        for (name, v) in [
            ("uav.altitude_m", self.altitude_m),
            ("uav.v_max", self.v_max),
            ("uav.delta_v", self.delta_v),
            ("uav.v_hover", self.v_hover),
            ("uav.p_com_w", self.p_com_w),
            ("uav.energy_budget_j", self.energy_budget_j),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                issues.push(format!("{name} must be strictly positive, got {v}"));
            }
        }
        if self.v_hover > self.v_max {
            issues.push(format!(
                "uav.v_hover ({}) must not exceed uav.v_max ({})",
                self.v_hover, self.v_max
            ));
        }
        issues
    }
}

/// A full problem instance. Immutable after construction; the distance
/// matrix and per-user service times are derived once at load.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub depot: [f64; 2],
    pub users: Vec<GroundUser>,
    pub uav: UavParams,
    pub channel: ChannelParams,
    pub power: PowerModelParams,
    /// Dense node-to-node Euclidean distances, `(K+1) x (K+1)`.
    dist: Matrix,
    /// Per-user transmission time `tau_k = data_bits / rate`, length `K`.
    tau: Vec<f64>,
    /// Outage-constrained approximate downlink rate in bits/s (identical for
    /// every user at constant altitude).
    rate_bps: f64,
}

impl Scenario {
    /// Builds a scenario, validating every invariant and deriving the
    /// distance matrix and per-user service times.
    pub fn new(
        depot: [f64; 2],
        users: Vec<GroundUser>,
        uav: UavParams,
        channel: ChannelParams,
        power: PowerModelParams,
    ) -> Result<Self> {
        let issues = validate_parts(&depot, &users, &uav, &channel, &power);
        if !issues.is_empty() {
            return Err(Error::InvalidScenario(issues));
        }

        let gain = crate::channel::snr_gain(&channel, uav.p_com_w, uav.altitude_m)?;
        let rate_bps = crate::channel::approx_rate(&channel, gain)?;
        let tau = users
            .iter()
            .map(|u| crate::channel::service_time(u, rate_bps))
            .collect::<Result<Vec<_>>>()?;

        let n = users.len() + 1;
        let mut dist = Matrix::zeros(n);
        let pos = |i: usize| -> [f64; 2] {
            if i == 0 {
                depot
            } else {
                users[i - 1].position
            }
        };
        for j in 0..n {
            for k in 0..n {
                dist.set(j, k, euclidean(pos(j), pos(k)));
            }
        }

        Ok(Scenario {
            depot,
            users,
            uav,
            channel,
            power,
            dist,
            tau,
            rate_bps,
        })
    }

    /// Number of ground users `K`.
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// Per-user transmission times `tau_k`, indexed `0..K` for users `1..=K`.
    pub fn service_times(&self) -> &[f64] {
        &self.tau
    }

    /// The common outage-constrained rate in bits/s.
    pub fn rate_bps(&self) -> f64 {
        self.rate_bps
    }

    /// Deadlines in user order, indexed `0..K` for users `1..=K`.
    pub fn deadlines(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.deadline_s).collect()
    }

    /// Euclidean distance between two nodes (0 = depot).
    pub fn hop_distance(&self, a: usize, b: usize) -> Result<f64> {
        let n = self.num_users() + 1;
        if a >= n || b >= n {
            return Err(Error::invalid_argument(format!(
                "node index out of range: {} (nodes 0..={})",
                a.max(b),
                n - 1
            )));
        }
        Ok(self.dist.get(a, b))
    }

    /// Travel-time matrix at speed `v`: entry `(j, k)` is
    /// `dist(j, k)/v + tau_k` for `j != k`; diagonal entries are unusable and
    /// set to infinity. Column 0 (return to depot) carries no service time.
    pub fn travel_time_matrix(&self, v: f64) -> Result<Matrix> {
        if !(v > 0.0) {
            return Err(Error::invalid_argument(format!(
                "speed must be positive, got {v}"
            )));
        }
        let n = self.num_users() + 1;
        let mut m = Matrix::zeros(n);
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    m.set(j, k, f64::INFINITY);
                } else {
                    let tau = if k == 0 { 0.0 } else { self.tau[k - 1] };
                    m.set(j, k, self.dist.get(j, k) / v + tau);
                }
            }
        }
        Ok(m)
    }

    /// Cumulative times `T_k` at which each user in the tour finishes being
    /// served, given one speed per hop.
    pub fn arrival_times(&self, tour: &[usize], speeds: &[f64]) -> Result<Vec<f64>> {
        if speeds.len() < tour.len() {
            return Err(Error::invalid_argument(format!(
                "profile has {} speeds for a {}-user tour (need at least one per serving hop)",
                speeds.len(),
                tour.len()
            )));
        }
        let mut t = 0.0;
        let mut prev = 0usize;
        let mut out = Vec::with_capacity(tour.len());
        for (i, &u) in tour.iter().enumerate() {
            let v = speeds[i];
            if !(v > 0.0) {
                return Err(Error::invalid_argument(format!(
                    "hop speed must be positive, got {v}"
                )));
            }
            if u == 0 || u > self.num_users() {
                return Err(Error::invalid_argument(format!("bad user id {u} in tour")));
            }
            t += self.hop_distance(prev, u)? / v + self.tau[u - 1];
            out.push(t);
            prev = u;
        }
        Ok(out)
    }

    pub fn validate(&self) -> Vec<String> {
        validate_parts(&self.depot, &self.users, &self.uav, &self.channel, &self.power)
    }
}

fn validate_parts(
    depot: &[f64; 2],
    users: &[GroundUser],
    uav: &UavParams,
    channel: &ChannelParams,
    power: &PowerModelParams,
) -> Vec<String> {
    let mut issues = Vec::new();
    if !depot.iter().all(|c| c.is_finite()) {
        issues.push(format!("depot position must be finite, got {depot:?}"));
    }
    if users.is_empty() {
        issues.push("scenario must contain at least one user".to_string());
    }
    let mut seen = std::collections::HashSet::new();
    for u in users {
        if u.id == 0 {
            issues.push("user id 0 is reserved for the depot".to_string());
        }
        if !seen.insert(u.id) {
            issues.push(format!("duplicate user id {}", u.id));
        }
        if !u.position.iter().all(|c| c.is_finite()) {
            issues.push(format!("user {}: position must be finite", u.id));
        }
        if !(u.data_bits > 0.0) {
            issues.push(format!(
                "user {}: data_bits must be > 0, got {}",
                u.id, u.data_bits
            ));
        }
        if !(u.deadline_s > 0.0) {
            issues.push(format!(
                "user {}: deadline_s must be > 0, got {}",
                u.id, u.deadline_s
            ));
        }
    }
    issues.extend(uav.validate());
    issues.extend(channel.validate());
    issues.extend(power.validate());
    issues
}

fn euclidean(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Dense square matrix of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid_argument("matrix rows must be square"));
        }
        let mut m = Matrix::zeros(n);
        for (j, row) in rows.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                m.set(j, k, v);
            }
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.n + k]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.data[j * self.n + k] = v;
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::energy::PowerModelParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn test_scenario(positions: &[[f64; 2]], deadlines: &[f64]) -> Scenario {
        super::tests_support::scenario_with(positions, deadlines, 50.0)
    }

    #[test]
    fn hop_distance_identity_and_triangle() {
        let s = test_scenario(&[[3.0, 4.0], [10.0, 0.0]], &[100.0, 100.0]);
        assert_eq!(s.hop_distance(1, 1).unwrap(), 0.0);
        assert_eq!(s.hop_distance(0, 1).unwrap(), 5.0);
        assert_eq!(s.hop_distance(1, 0).unwrap(), 5.0);
        assert!(s.hop_distance(0, 3).is_err());
    }

    #[test]
    fn hop_distance_depot_row() {
        // depot at (1.5, 398), user straight east
        let users = vec![GroundUser {
            id: 1,
            position: [201.5, 398.0],
            data_bits: 1.0,
            deadline_s: 1.0e9,
        }];
        let s = Scenario::new(
            [1.5, 398.0],
            users,
            UavParams {
                altitude_m: 50.0,
                v_max: 50.0,
                delta_v: 50.0,
                v_hover: 10.0,
                p_com_w: 5.0,
                energy_budget_j: 5.0e5,
            },
            ChannelParams::paper_defaults(),
            PowerModelParams::default(),
        )
        .unwrap();
        assert_relative_eq!(s.hop_distance(0, 1).unwrap(), 200.0, max_relative = 1e-15);
    }

    #[test]
    fn travel_time_matrix_entries() {
        // zero-distance pair: pure service time
        let s = test_scenario(&[[0.0, 0.0]], &[100.0]);
        let tau = s.service_times()[0];
        let m = s.travel_time_matrix(50.0).unwrap();
        assert_relative_eq!(m.get(0, 1), tau, max_relative = 1e-15);
        assert!(m.get(0, 0).is_infinite());
        assert!(m.get(1, 1).is_infinite());
        assert!(s.travel_time_matrix(0.0).is_err());
        assert!(s.travel_time_matrix(-1.0).is_err());
    }

    #[test]
    fn travel_time_direct_evaluation() {
        // d = 100 m, v = 50 m/s, plus that user's tau
        let s = test_scenario(&[[100.0, 0.0]], &[100.0]);
        let tau = s.service_times()[0];
        let m = s.travel_time_matrix(50.0).unwrap();
        assert_relative_eq!(m.get(0, 1), 2.0 + tau, max_relative = 1e-12);
        // return column has no service time
        assert_relative_eq!(m.get(1, 0), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn arrival_times_two_hops() {
        // d = (10, 10), v = (5, 5): travel 2 s each, plus per-user tau
        let s = test_scenario(&[[10.0, 0.0], [10.0, 10.0]], &[100.0, 100.0]);
        let tau = s.service_times().to_vec();
        let t = s.arrival_times(&[1, 2], &[5.0, 5.0, 5.0]).unwrap();
        assert_relative_eq!(t[0], 2.0 + tau[0], max_relative = 1e-12);
        assert_relative_eq!(t[1], 4.0 + tau[0] + tau[1], max_relative = 1e-12);
        assert!(s.arrival_times(&[1, 2], &[5.0]).is_err());
    }

    #[test]
    fn arrival_times_monotone_in_speed() {
        let s = test_scenario(&[[40.0, 30.0], [80.0, 0.0]], &[100.0, 100.0]);
        let slow = s.arrival_times(&[1, 2], &[10.0, 10.0, 10.0]).unwrap();
        let fast = s.arrival_times(&[1, 2], &[10.0, 20.0, 10.0]).unwrap();
        assert!(fast[0] <= slow[0] + 1e-15);
        assert!(fast[1] < slow[1]);
    }

    #[test]
    fn validation_catches_bad_fields() {
        let users = vec![GroundUser {
            id: 1,
            position: [0.0, 0.0],
            data_bits: -5.0,
            deadline_s: 0.0,
        }];
        let err = Scenario::new(
            [0.0, 0.0],
            users,
            UavParams {
                altitude_m: 50.0,
                v_max: 50.0,
                delta_v: 50.0,
                v_hover: 60.0, // exceeds v_max
                p_com_w: 5.0,
                energy_budget_j: 5.0e5,
            },
            ChannelParams::paper_defaults(),
            PowerModelParams::default(),
        )
        .unwrap_err();
        match err {
            Error::InvalidScenario(issues) => {
                assert!(issues.iter().any(|m| m.contains("data_bits")));
                assert!(issues.iter().any(|m| m.contains("deadline_s")));
                assert!(issues.iter().any(|m| m.contains("v_hover")));
            }
            other => panic!("expected InvalidScenario, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn triangle_inequality(
            coords in proptest::collection::vec((-500.0..500.0f64, -500.0..500.0f64), 3..6)
        ) {
            let pts: Vec<[f64; 2]> = coords.iter().map(|&(x, y)| [x, y]).collect();
            let deadlines = vec![1.0e9; pts.len()];
            let s = test_scenario(&pts, &deadlines);
            let n = s.num_users() + 1;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let ab = s.hop_distance(a, b).unwrap();
                        let bc = s.hop_distance(b, c).unwrap();
                        let ac = s.hop_distance(a, c).unwrap();
                        prop_assert!(ac <= ab + bc + 1e-9);
                    }
                }
            }
        }
    }
}
