//! Feasible visiting orders under requested-timeout constraints.
//!
//! All searches run at `v = v_max`: if a tour meets every deadline at top
//! speed it is deadline-feasible, and if it fails at top speed no slower
//! profile can rescue it. Four planners share one cost structure:
//!
//! * exhaustive enumeration over all `K!` orders,
//! * a one-step-lookahead greedy heuristic,
//! * a forward dynamic program over `(visited-set, last-user)` states with
//!   minimum-cost dominance,
//! * a deadline-blind shortest-cycle baseline (exact subset DP).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Matrix, Scenario};

/// Hard cap on exhaustive enumeration; `K!` growth makes anything larger
/// a mistake rather than a request.
pub const EXHAUSTIVE_USER_CAP: usize = 10;
/// Hard cap on subset-DP state spaces (2^K masks).
pub const DP_USER_CAP: usize = 20;

/// A visiting order over user ids `1..=K`; depot endpoints are implied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
}

impl Tour {
    pub fn new(order: Vec<usize>) -> Self {
        Tour { order }
    }
}

/// Which planner produced a path set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Heuristic,
    Dp,
    Tsp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Exhaustive, Method::Heuristic, Method::Dp, Method::Tsp];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Heuristic => "heuristic",
            Method::Dp => "dp",
            Method::Tsp => "tsp",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Method::Exhaustive),
            "heuristic" => Ok(Method::Heuristic),
            "dp" => Ok(Method::Dp),
            "tsp" => Ok(Method::Tsp),
            other => Err(Error::invalid_argument(format!(
                "unknown method `{other}` (expected exhaustive|heuristic|dp|tsp)"
            ))),
        }
    }
}

/// Candidate tours from one planner, with completion times at `v_max`.
#[derive(Debug, Clone)]
pub struct FeasiblePathSet {
    pub method: Method,
    pub tours: Vec<Tour>,
    /// Time at which the last user of each tour finishes being served.
    pub travel_times: Vec<f64>,
    /// Deadline feasibility per tour. Always true for the deadline-aware
    /// planners; the TSP baseline may return an infeasible tour, flagged.
    pub deadline_feasible: Vec<bool>,
}

impl FeasiblePathSet {
    fn empty(method: Method) -> Self {
        FeasiblePathSet {
            method,
            tours: Vec::new(),
            travel_times: Vec::new(),
            deadline_feasible: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tours.is_empty()
    }
}

/// The planning cost structure: per-edge times `a(j, k)` at `v_max`
/// (travel plus the destination's service time) and per-user deadlines.
#[derive(Debug, Clone)]
pub struct PlanningCosts {
    cost: Matrix,
    deadlines: Vec<f64>,
}

impl PlanningCosts {
    /// Wraps an explicit cost matrix. `cost` must be `(K+1) x (K+1)` with
    /// node 0 as the depot; `deadlines[k-1]` is user `k`'s deadline.
    pub fn new(cost: Matrix, deadlines: Vec<f64>) -> Result<Self> {
        if cost.size() != deadlines.len() + 1 {
            return Err(Error::invalid_argument(format!(
                "cost matrix is {}x{} but there are {} deadlines",
                cost.size(),
                cost.size(),
                deadlines.len()
            )));
        }
        if cost.size() < 2 {
            return Err(Error::invalid_argument("need at least one user"));
        }
        Ok(PlanningCosts { cost, deadlines })
    }

    /// Derives costs from a scenario at its configured `v_max`.
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        PlanningCosts::new(s.travel_time_matrix(s.uav.v_max)?, s.deadlines())
    }

    pub fn num_users(&self) -> usize {
        self.deadlines.len()
    }

    #[inline]
    pub fn edge(&self, j: usize, k: usize) -> f64 {
        self.cost.get(j, k)
    }

    pub fn deadline(&self, user: usize) -> f64 {
        self.deadlines[user - 1]
    }

    /// First-hop times `a(0, k)` for every user.
    pub fn first_hop_vector(&self) -> Vec<f64> {
        (1..=self.num_users()).map(|k| self.edge(0, k)).collect()
    }

    /// Completion time at the last served user of `order`.
    pub fn completion_time(&self, order: &[usize]) -> f64 {
        let mut t = 0.0;
        let mut prev = 0usize;
        for &u in order {
            t += self.edge(prev, u);
            prev = u;
        }
        t
    }

    /// Full cycle time of `order` including the return leg to the depot.
    pub fn cycle_time(&self, order: &[usize]) -> f64 {
        match order.last() {
            Some(&last) => self.completion_time(order) + self.edge(last, 0),
            None => 0.0,
        }
    }

    /// Whether every prefix of `order` meets its user's deadline.
    pub fn is_deadline_feasible(&self, order: &[usize]) -> bool {
        let mut t = 0.0;
        let mut prev = 0usize;
        for &u in order {
            t += self.edge(prev, u);
            if t > self.deadline(u) {
                return false;
            }
            prev = u;
        }
        true
    }
}

/// Fast necessary condition: each user must be individually reachable in
/// time straight from the depot. Returns the verdict and the first-hop
/// time vector.
pub fn check_first_hop_feasibility(c: &PlanningCosts) -> (bool, Vec<f64>) {
    let a = c.first_hop_vector();
    let ok = a
        .iter()
        .zip(&c.deadlines)
        .all(|(&t, &eta)| t <= eta);
    (ok, a)
}

/// Enumerates every visiting order, keeps the deadline-feasible ones, and
/// returns the `psi` with the shortest completion times. Ties are broken by
/// lexicographic tour order. Refuses instances above [`EXHAUSTIVE_USER_CAP`].
pub fn exhaustive_search(c: &PlanningCosts, psi: usize) -> Result<FeasiblePathSet> {
    let k = c.num_users();
    if k > EXHAUSTIVE_USER_CAP {
        return Err(Error::TooLarge(format!(
            "exhaustive search on {k} users would enumerate {k}! tours (cap {EXHAUSTIVE_USER_CAP})"
        )));
    }
    if psi == 0 {
        return Err(Error::invalid_argument("psi must be >= 1"));
    }
    let mut set = FeasiblePathSet::empty(Method::Exhaustive);
    if !check_first_hop_feasibility(c).0 {
        return Ok(set);
    }

    let mut feasible: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut prefix = Vec::with_capacity(k);
    let mut used = vec![false; k + 1];
    extend_prefix(c, &mut prefix, &mut used, 0, 0.0, &mut feasible);

    // Depth-first enumeration visits tours in lexicographic order, so a
    // stable sort on time alone leaves ties lexicographic.
    feasible.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    feasible.truncate(psi);

    for (t, order) in feasible {
        set.tours.push(Tour::new(order));
        set.travel_times.push(t);
        set.deadline_feasible.push(true);
    }
    Ok(set)
}

fn extend_prefix(
    c: &PlanningCosts,
    prefix: &mut Vec<usize>,
    used: &mut [bool],
    last: usize,
    elapsed: f64,
    out: &mut Vec<(f64, Vec<usize>)>,
) {
    if prefix.len() == c.num_users() {
        out.push((elapsed, prefix.clone()));
        return;
    }
    for u in 1..=c.num_users() {
        if used[u] {
            continue;
        }
        let t = elapsed + c.edge(last, u);
        // any completion shares this prefix, so a violated deadline here
        // rules out the whole subtree
        if t <= c.deadline(u) {
            used[u] = true;
            prefix.push(u);
            extend_prefix(c, prefix, used, u, t, out);
            prefix.pop();
            used[u] = false;
        }
    }
}

/// One-step-lookahead greedy construction: at each step, among the
/// not-yet-visited users whose deadline would still be met, pick the
/// closest (smallest edge time), breaking ties by the smaller deadline and
/// then the smaller id. Returns at most one tour.
#[allow(clippy::needless_range_loop)] // user ids are semantic indices
pub fn heuristic_search(c: &PlanningCosts) -> FeasiblePathSet {
    let mut set = FeasiblePathSet::empty(Method::Heuristic);
    if !check_first_hop_feasibility(c).0 {
        return set;
    }
    let k = c.num_users();
    let mut visited = vec![false; k + 1];
    let mut order = Vec::with_capacity(k);
    let mut last = 0usize;
    let mut elapsed = 0.0f64;

    for _ in 0..k {
        let mut pick: Option<(f64, f64, usize)> = None;
        for u in 1..=k {
            if visited[u] {
                continue;
            }
            let hop = c.edge(last, u);
            if elapsed + hop > c.deadline(u) {
                continue;
            }
            let key = (hop, c.deadline(u), u);
            if pick.is_none_or(|best| key < best) {
                pick = Some(key);
            }
        }
        match pick {
            Some((hop, _, u)) => {
                visited[u] = true;
                order.push(u);
                last = u;
                elapsed += hop;
            }
            None => return set, // dead end: no feasible path found
        }
    }

    set.tours.push(Tour::new(order));
    set.travel_times.push(elapsed);
    set.deadline_feasible.push(true);
    set
}

/// One dynamic-programming state: the set of visited nodes (bit 0 is the
/// depot), the last visited user, the minimal completion cost, and the
/// predecessor used to reach it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpState {
    /// Visited-set bitmask; bit 0 = depot, bit `k` = user `k`.
    pub visited: u32,
    pub last: usize,
    pub cost: f64,
    pub parent: usize,
}

#[derive(Clone, Copy)]
struct DpEntry {
    cost: f64,
    parent: u8,
}

/// Forward DP over `(visited-set, last-user)` states. A state enters a
/// layer only if its cost meets the last user's deadline, and per state key
/// only the minimum-cost entry survives (first insertion wins ties, with
/// candidates generated in ascending `(mask, last, next)` order). Each
/// surviving full-set state is backtracked into a tour, so up to `K` tours
/// return. Refuses instances above [`DP_USER_CAP`].
pub fn dp_search(c: &PlanningCosts) -> Result<FeasiblePathSet> {
    dp_search_detailed(c).map(|(set, _)| set)
}

/// [`dp_search`], additionally exposing every retained state in layer order
/// for inspection and regression tests.
pub fn dp_search_detailed(c: &PlanningCosts) -> Result<(FeasiblePathSet, Vec<DpState>)> {
    let k = c.num_users();
    if k > DP_USER_CAP {
        return Err(Error::TooLarge(format!(
            "dp search on {k} users needs 2^{k} subsets (cap {DP_USER_CAP})"
        )));
    }
    let mut set = FeasiblePathSet::empty(Method::Dp);
    if !check_first_hop_feasibility(c).0 {
        return Ok((set, Vec::new()));
    }

    // layers[m]: states with m users visited, keyed by (user mask, last)
    let mut layers: Vec<HashMap<(u32, u8), DpEntry>> = Vec::with_capacity(k + 1);

    let mut first = HashMap::new();
    for u in 1..=k {
        let t = c.edge(0, u);
        if t <= c.deadline(u) {
            first.insert(
                (1u32 << (u - 1), u as u8),
                DpEntry {
                    cost: t,
                    parent: 0,
                },
            );
        }
    }
    layers.push(first);

    for _m in 2..=k {
        let prev = layers.last().unwrap();
        let mut keys: Vec<(u32, u8)> = prev.keys().copied().collect();
        keys.sort_unstable();
        let mut next: HashMap<(u32, u8), DpEntry> = HashMap::new();
        for key in keys {
            let entry = prev[&key];
            let (mask, last) = key;
            for u in 1..=k {
                let bit = 1u32 << (u - 1);
                if mask & bit != 0 {
                    continue;
                }
                let t = entry.cost + c.edge(last as usize, u);
                if t > c.deadline(u) {
                    continue;
                }
                let cand = DpEntry {
                    cost: t,
                    parent: last,
                };
                next.entry((mask | bit, u as u8))
                    .and_modify(|e| {
                        if t < e.cost {
                            *e = cand;
                        }
                    })
                    .or_insert(cand);
            }
        }
        layers.push(next);
    }

    // collect all retained states in deterministic layer order
    let mut states = Vec::new();
    for layer in &layers {
        let mut keys: Vec<(u32, u8)> = layer.keys().copied().collect();
        keys.sort_unstable();
        for (mask, last) in keys {
            let e = layer[&(mask, last)];
            states.push(DpState {
                visited: (mask << 1) | 1,
                last: last as usize,
                cost: e.cost,
                parent: e.parent as usize,
            });
        }
    }

    // backtrack each surviving terminal state
    let full: u32 = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
    let terminal = layers.last().unwrap();
    let mut ends: Vec<u8> = terminal
        .keys()
        .filter(|&&(mask, _)| mask == full)
        .map(|&(_, last)| last)
        .collect();
    ends.sort_unstable();

    for end in ends {
        let mut order = Vec::with_capacity(k);
        let mut mask = full;
        let mut cur = end;
        let mut layer_idx = k - 1;
        let cost = terminal[&(full, end)].cost;
        loop {
            order.push(cur as usize);
            let parent = layers[layer_idx][&(mask, cur)].parent;
            if parent == 0 {
                break;
            }
            mask &= !(1u32 << (cur - 1));
            cur = parent;
            layer_idx -= 1;
        }
        order.reverse();
        set.tours.push(Tour::new(order));
        set.travel_times.push(cost);
        set.deadline_feasible.push(true);
    }
    Ok((set, states))
}

/// Deadline-blind reference: the exact minimum-cost cycle over the edge
/// times, found by subset DP. Whether the resulting tour happens to meet
/// the deadlines is reported in the feasibility flag. Since every cycle
/// pays each user's service time exactly once, minimizing summed edge times
/// is the same as minimizing flown distance.
pub fn tsp_baseline(c: &PlanningCosts) -> Result<FeasiblePathSet> {
    let k = c.num_users();
    if k > DP_USER_CAP {
        return Err(Error::TooLarge(format!(
            "tsp baseline on {k} users needs 2^{k} subsets (cap {DP_USER_CAP})"
        )));
    }
    let mut set = FeasiblePathSet::empty(Method::Tsp);

    let order = if k == 1 {
        vec![1usize]
    } else {
        let n_masks = 1usize << k;
        let mut cost = vec![f64::INFINITY; n_masks * k];
        let mut parent = vec![0u8; n_masks * k];
        let idx = |mask: usize, last: usize| mask * k + (last - 1);

        for u in 1..=k {
            cost[idx(1 << (u - 1), u)] = c.edge(0, u);
        }
        for mask in 1..n_masks {
            for last in 1..=k {
                let cur = cost[idx(mask, last)];
                if !cur.is_finite() || mask & (1 << (last - 1)) == 0 {
                    continue;
                }
                for u in 1..=k {
                    let bit = 1 << (u - 1);
                    if mask & bit != 0 {
                        continue;
                    }
                    let t = cur + c.edge(last, u);
                    let j = idx(mask | bit, u);
                    if t < cost[j] {
                        cost[j] = t;
                        parent[j] = last as u8;
                    }
                }
            }
        }

        let full = n_masks - 1;
        // among equal-length cycles prefer the orientation that finishes
        // serving earliest, then the smallest end user
        let mut best = f64::INFINITY;
        let mut best_completion = f64::INFINITY;
        let mut best_end = 0usize;
        for u in 1..=k {
            let completion = cost[idx(full, u)];
            let t = completion + c.edge(u, 0);
            if t < best || (t == best && completion < best_completion) {
                best = t;
                best_completion = completion;
                best_end = u;
            }
        }
        let mut order = Vec::with_capacity(k);
        let mut mask = full;
        let mut cur = best_end;
        while cur != 0 {
            order.push(cur);
            let p = parent[idx(mask, cur)] as usize;
            mask &= !(1 << (cur - 1));
            cur = p;
        }
        order.reverse();
        order
    };

    let feasible = c.is_deadline_feasible(&order);
    set.travel_times.push(c.completion_time(&order));
    set.deadline_feasible.push(feasible);
    set.tours.push(Tour::new(order));
    Ok(set)
}
