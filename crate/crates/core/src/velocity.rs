//! Energy-minimal per-hop speeds for a fixed tour.
//!
//! For a tour with `K` users there are `K+1` hops. The flight energy
//! `sum_i E_fly(v_i, d_i)` is minimized subject to the cumulative deadline
//! constraints, the speed box, and the hop-to-hop speed-change limit.
//! Each hop's flight energy is convex in its speed, every constraint is
//! convex, and the all-`v_max` profile of any deadline-feasible tour is a
//! feasible start, so a log-barrier interior-point method with dense Newton
//! steps solves the problem to high accuracy; the dimension never exceeds
//! `K+1 <= 21`.
//!
//! Hover and communication energies do not depend on the speeds and are
//! added back to the reported totals after optimization.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::energy::{d2_e_fly, d_e_fly, e_fly, p_fly, EnergyBreakdown, PowerModelParams};
use crate::error::{Error, Result};
use crate::planner::{FeasiblePathSet, Method, Tour};
use crate::scenario::Scenario;

/// One speed per hop, m/s; `speeds[i]` is flown on the hop into the
/// `i`-th stop (the last entry is the return to the depot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityProfile {
    pub speeds: Vec<f64>,
}

/// Outcome of one velocity optimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub profile: VelocityProfile,
    /// Optimized flight energy plus the constant hover and communication
    /// energies of the tour.
    pub energy: EnergyBreakdown,
    /// The optimized objective: flight energy only, joules.
    pub fly_objective_j: f64,
    /// Total Newton iterations across barrier stages.
    pub iterations: usize,
    /// Relative stationarity residual of the KKT system at the returned
    /// point, using the barrier dual estimates.
    pub kkt_residual: f64,
    pub converged: bool,
}

/// Interior-point knobs. The defaults solve every instance in this crate's
/// size range; they are exposed mainly so tests can tighten or loosen them.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Effective lower speed bound: a zero lower bound would make travel
    /// time unbounded, so hops are kept at or above this speed.
    pub v_min: f64,
    /// Initial barrier parameter.
    pub mu_initial: f64,
    /// Final barrier parameter; the duality gap at exit is about
    /// `m * mu_final` joules for `m` constraints.
    pub mu_final: f64,
    /// Iteration cap per barrier stage.
    pub max_newton_per_stage: usize,
    /// Residual below which the report is marked converged.
    pub kkt_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            v_min: 0.1,
            mu_initial: 1.0,
            mu_final: 1e-8,
            max_newton_per_stage: 200,
            kkt_tol: 1e-6,
        }
    }
}

/// Flight objective and its gradient for a candidate profile.
/// Zero-length hops contribute nothing regardless of their speed entry.
pub fn objective_and_gradient(
    speeds: &[f64],
    distances: &[f64],
    p: &PowerModelParams,
) -> Result<(f64, Vec<f64>)> {
    if speeds.len() != distances.len() {
        return Err(Error::invalid_argument(format!(
            "{} speeds for {} hops",
            speeds.len(),
            distances.len()
        )));
    }
    if let Some(v) = speeds.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::invalid_argument(format!(
            "all speeds must be positive, got {v}"
        )));
    }
    let mut f = 0.0;
    let mut grad = Vec::with_capacity(speeds.len());
    for (&v, &d) in speeds.iter().zip(distances) {
        f += e_fly(v, d, p);
        grad.push(d_e_fly(v, d, p));
    }
    Ok((f, grad))
}

/// A planned mission: tour, speeds, energies, and the solve diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanResult {
    pub method: Method,
    pub tour: Tour,
    pub profile: VelocityProfile,
    pub energy: EnergyBreakdown,
    /// Service-completion time at each user, seconds.
    pub arrival_times: Vec<f64>,
    /// Completion time of the full cycle including the return leg.
    pub mission_time_s: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Outcome of optimizing a whole path set: the cheapest in-budget plan, if
/// any, plus how many candidate tours failed to optimize.
#[derive(Debug, Clone)]
pub struct PlanSelection {
    pub best: Option<PlanResult>,
    pub candidates: usize,
    pub solver_failures: usize,
}

/// Optimizes every tour in the set, filters by the energy budget, and keeps
/// the minimum-total-energy plan. Ties go to the smaller planning-time
/// entry, then to lexicographic tour order. An empty result is an outage,
/// not an error; tours whose solve fails are skipped and counted.
pub fn pick_best_plan(set: &FeasiblePathSet, s: &Scenario) -> PlanSelection {
    let mut best: Option<(PlanResult, f64)> = None;
    let mut failures = 0usize;
    for (i, tour) in set.tours.iter().enumerate() {
        let report = match optimize_velocities(tour, s) {
            Ok(r) => r,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        if report.energy.total_j > s.uav.energy_budget_j {
            continue;
        }
        let time = set.travel_times[i];
        let better = match &best {
            None => true,
            Some((cur, cur_time)) => {
                (report.energy.total_j, time, &tour.order)
                    < (cur.energy.total_j, *cur_time, &cur.tour.order)
            }
        };
        if better {
            let arrival_times = s
                .arrival_times(&tour.order, &report.profile.speeds)
                .unwrap_or_default();
            let mission_time_s = arrival_times.last().copied().unwrap_or(0.0)
                + s.hop_distance(*tour.order.last().unwrap_or(&0), 0).unwrap_or(0.0)
                    / report.profile.speeds.last().copied().unwrap_or(1.0);
            best = Some((
                PlanResult {
                    method: set.method,
                    tour: tour.clone(),
                    profile: report.profile,
                    energy: report.energy,
                    arrival_times,
                    mission_time_s,
                    kkt_residual: report.kkt_residual,
                    iterations: report.iterations,
                    converged: report.converged,
                },
                time,
            ));
        }
    }
    PlanSelection {
        best: best.map(|(plan, _)| plan),
        candidates: set.tours.len(),
        solver_failures: failures,
    }
}

/// Minimizes the tour's flight energy over per-hop speeds. See the module
/// docs for the formulation. Fails with `InfeasibleInput` when even the
/// all-`v_max` profile misses a deadline.
pub fn optimize_velocities(tour: &Tour, s: &Scenario) -> Result<OptimizationReport> {
    optimize_velocities_with(tour, s, &SolverOptions::default())
}

pub fn optimize_velocities_with(
    tour: &Tour,
    s: &Scenario,
    opts: &SolverOptions,
) -> Result<OptimizationReport> {
    let k = tour.order.len();
    if k == 0 {
        return Err(Error::invalid_argument("empty tour"));
    }
    let v_max = s.uav.v_max;
    if v_max <= 2.0 * opts.v_min {
        return Err(Error::invalid_argument(format!(
            "v_max = {v_max} leaves no room above the v_min = {} floor",
            opts.v_min
        )));
    }

    // hop distances 0 -> u1 -> ... -> uK -> 0 and in-tour service times
    let n = k + 1;
    let mut d = Vec::with_capacity(n);
    let mut prev = 0usize;
    for &u in &tour.order {
        d.push(s.hop_distance(prev, u)?);
        prev = u;
    }
    d.push(s.hop_distance(prev, 0)?);
    let tau = s.service_times();

    // deadline budgets on cumulative flight time: sum_{i<=k} d_i/v_i <= b_k
    let mut b = Vec::with_capacity(k);
    let mut tau_cum = 0.0;
    for (idx, &u) in tour.order.iter().enumerate() {
        if u == 0 || u > s.num_users() {
            return Err(Error::invalid_argument(format!("bad user id {u} in tour")));
        }
        tau_cum += tau[u - 1];
        let _ = idx;
        b.push(s.users[u - 1].deadline_s - tau_cum);
    }

    // feasibility of the all-v_max start, and detection of exactly binding
    // prefixes (those pin their hops to v_max)
    let mut prefix = 0.0;
    let mut fixed = vec![false; n];
    for (ki, &bk) in b.iter().enumerate() {
        prefix += d[ki] / v_max;
        let tol = 1e-9 * prefix.abs().max(1.0);
        if prefix > bk + tol {
            return Err(Error::InfeasibleInput(format!(
                "tour misses the deadline of user {} even at v_max (needs {:.6} s, allowed {:.6} s)",
                tour.order[ki],
                prefix,
                bk
            )));
        }
        if prefix > bk - tol {
            for f in fixed.iter_mut().take(ki + 1) {
                *f = true;
            }
        }
    }

    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let mut speeds = vec![v_max; n];
    let mut iterations = 0usize;
    let mut kkt_residual = 0.0f64;
    let mut stalled = false;

    if !free.is_empty() {
        let problem = build_barrier_problem(&free, &fixed, &d, &b, s, opts, v_max)?;
        let mut x = interior_start(&problem, &free, &d, &b, v_max, s.uav.delta_v);
        // intermediate stages only warm-start the next one; the last stage
        // iterates directly against the reported stationarity metric
        let mut mu = opts.mu_initial;
        loop {
            let last = mu <= opts.mu_final;
            let target = if last { Some(0.5 * opts.kkt_tol) } else { None };
            let (iters, ok) = newton_stage(&problem, &mut x, mu, target, opts);
            iterations += iters;
            if last {
                stalled = !ok;
                break;
            }
            mu = (mu / 10.0).max(opts.mu_final);
        }
        kkt_residual = kkt_stationarity(&problem, &x, opts.mu_final);
        for (slot, &i) in free.iter().enumerate() {
            speeds[i] = x[slot];
        }
    }

    let fly: f64 = speeds
        .iter()
        .zip(&d)
        .map(|(&v, &dist)| e_fly(v, dist, &s.power))
        .sum();
    let tau_total: f64 = tour.order.iter().map(|&u| tau[u - 1]).sum();
    let hover = p_fly(s.uav.v_hover, &s.power) * tau_total;
    let comm = s.uav.p_com_w * tau_total;

    let converged = !stalled && kkt_residual < opts.kkt_tol;
    let report = OptimizationReport {
        profile: VelocityProfile { speeds },
        energy: EnergyBreakdown::new(fly, hover, comm),
        fly_objective_j: fly,
        iterations,
        kkt_residual,
        converged,
    };
    if !converged {
        return Err(Error::NumericFailure {
            message: format!(
                "velocity optimization stalled (kkt residual {kkt_residual:.3e} after {iterations} iterations)"
            ),
            best: Some(Box::new(report)),
        });
    }
    Ok(report)
}

/// One inequality `g(x) <= 0` over the free variables.
enum Constraint {
    /// `sum_i a_i x_i - bound <= 0`
    Lin { terms: Vec<(usize, f64)>, bound: f64 },
    /// `sum_i d_i / x_i - bound <= 0`
    SumInv { terms: Vec<(usize, f64)>, bound: f64 },
}

impl Constraint {
    fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Constraint::Lin { terms, bound } => {
                terms.iter().map(|&(i, a)| a * x[i]).sum::<f64>() - bound
            }
            Constraint::SumInv { terms, bound } => {
                terms.iter().map(|&(i, di)| di / x[i]).sum::<f64>() - bound
            }
        }
    }

    /// Adds `w * grad g` into `out`.
    fn add_scaled_gradient(&self, x: &DVector<f64>, w: f64, out: &mut DVector<f64>) {
        match self {
            Constraint::Lin { terms, .. } => {
                for &(i, a) in terms {
                    out[i] += w * a;
                }
            }
            Constraint::SumInv { terms, .. } => {
                for &(i, di) in terms {
                    out[i] += w * (-di / (x[i] * x[i]));
                }
            }
        }
    }

    fn gradient(&self, x: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut g = DVector::zeros(n);
        self.add_scaled_gradient(x, 1.0, &mut g);
        g
    }
}

struct BarrierProblem {
    n: usize,
    /// Hop distance attached to each free variable.
    obj_d: Vec<f64>,
    power: PowerModelParams,
    constraints: Vec<Constraint>,
}

impl BarrierProblem {
    fn objective(&self, x: &DVector<f64>) -> f64 {
        (0..self.n).map(|i| e_fly(x[i], self.obj_d[i], &self.power)).sum()
    }

    fn objective_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n,
            (0..self.n).map(|i| d_e_fly(x[i], self.obj_d[i], &self.power)),
        )
    }

    fn strictly_feasible(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|&v| v > 0.0) && self.constraints.iter().all(|c| c.value(x) < 0.0)
    }

    fn barrier_value(&self, x: &DVector<f64>, mu: f64) -> f64 {
        let mut phi = self.objective(x);
        for c in &self.constraints {
            let g = c.value(x);
            if g >= 0.0 {
                return f64::INFINITY;
            }
            phi -= mu * (-g).ln();
        }
        phi
    }
}

fn build_barrier_problem(
    free: &[usize],
    fixed: &[bool],
    d: &[f64],
    b: &[f64],
    s: &Scenario,
    opts: &SolverOptions,
    v_max: f64,
) -> Result<BarrierProblem> {
    let n = free.len();
    let slot_of = {
        let mut map = vec![usize::MAX; d.len()];
        for (slot, &i) in free.iter().enumerate() {
            map[i] = slot;
        }
        map
    };

    let mut constraints = Vec::new();

    // deadline prefixes, with fixed hops' flight time moved to the bound
    for (ki, &bk) in b.iter().enumerate() {
        let mut terms = Vec::new();
        let mut bound = bk;
        for i in 0..=ki {
            if d[i] == 0.0 {
                continue;
            }
            if fixed[i] {
                bound -= d[i] / v_max;
            } else {
                terms.push((slot_of[i], d[i]));
            }
        }
        if !terms.is_empty() {
            constraints.push(Constraint::SumInv { terms, bound });
        }
    }

    // speed box
    for (slot, _) in free.iter().enumerate() {
        constraints.push(Constraint::Lin {
            terms: vec![(slot, 1.0)],
            bound: v_max,
        });
        constraints.push(Constraint::Lin {
            terms: vec![(slot, -1.0)],
            bound: -opts.v_min,
        });
    }

    // hop-to-hop speed change
    let dv = s.uav.delta_v;
    for i in 0..d.len() - 1 {
        match (fixed[i], fixed[i + 1]) {
            (false, false) => {
                let (a, c) = (slot_of[i], slot_of[i + 1]);
                constraints.push(Constraint::Lin {
                    terms: vec![(c, 1.0), (a, -1.0)],
                    bound: dv,
                });
                constraints.push(Constraint::Lin {
                    terms: vec![(a, 1.0), (c, -1.0)],
                    bound: dv,
                });
            }
            (true, false) => {
                let c = slot_of[i + 1];
                constraints.push(Constraint::Lin {
                    terms: vec![(c, 1.0)],
                    bound: v_max + dv,
                });
                constraints.push(Constraint::Lin {
                    terms: vec![(c, -1.0)],
                    bound: dv - v_max,
                });
            }
            (false, true) => {
                let a = slot_of[i];
                constraints.push(Constraint::Lin {
                    terms: vec![(a, 1.0)],
                    bound: v_max + dv,
                });
                constraints.push(Constraint::Lin {
                    terms: vec![(a, -1.0)],
                    bound: dv - v_max,
                });
            }
            (true, true) => {} // both at v_max, difference zero
        }
    }

    let obj_d = free.iter().map(|&i| d[i]).collect();
    Ok(BarrierProblem {
        n,
        obj_d,
        power: s.power.clone(),
        constraints,
    })
}

/// Picks a strictly interior starting point: all free hops slightly below
/// `v_max`, with the backoff small enough that every deadline prefix keeps
/// positive slack and no speed-change constraint activates.
fn interior_start(
    problem: &BarrierProblem,
    free: &[usize],
    d: &[f64],
    b: &[f64],
    v_max: f64,
    delta_v: f64,
) -> DVector<f64> {
    // stay inside the speed-change band around any v_max-pinned neighbor
    let mut delta: f64 = 0.05f64.min(0.5 * delta_v / v_max);

    // cap delta so every non-binding prefix keeps at least half its slack
    let mut prefix_all = 0.0;
    let mut prefix_free = 0.0;
    for (ki, &bk) in b.iter().enumerate() {
        prefix_all += d[ki] / v_max;
        if free.contains(&ki) {
            prefix_free += d[ki] / v_max;
        }
        let slack = bk - prefix_all;
        if prefix_free > 0.0 && slack.is_finite() && slack > 0.0 {
            // (1/(1-delta) - 1) * prefix_free <= slack / 2
            let limit = slack / (2.0 * prefix_free + slack);
            delta = delta.min(limit);
        }
    }
    delta = delta.max(1e-12);

    let mut x = DVector::from_element(problem.n, v_max * (1.0 - delta));
    // back off further if anything is still on a boundary
    let mut attempts = 0;
    while !problem.strictly_feasible(&x) && attempts < 8 {
        delta *= 0.1;
        x = DVector::from_element(problem.n, v_max * (1.0 - delta));
        attempts += 1;
    }
    x
}

/// Newton minimization of the barrier function at fixed `mu`.
///
/// Warm-up stages (`metric_target = None`) stop on the Newton decrement,
/// which measures proximity to the stage minimizer in the barrier's own
/// metric and stays meaningful however ill-conditioned the active
/// constraints make the Hessian. The final stage instead iterates until
/// the reported KKT stationarity metric reaches `metric_target`. Returns
/// the iteration count and whether the stage's criterion was met.
fn newton_stage(
    problem: &BarrierProblem,
    x: &mut DVector<f64>,
    mu: f64,
    metric_target: Option<f64>,
    opts: &SolverOptions,
) -> (usize, bool) {
    let n = problem.n;
    for iter in 0..opts.max_newton_per_stage {
        if let Some(target) = metric_target {
            if kkt_stationarity(problem, x, mu) <= target {
                return (iter, true);
            }
        }
        // gradient and Hessian of the barrier
        let mut grad = problem.objective_gradient(x);
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            hess[(i, i)] = d2_e_fly(x[i], problem.obj_d[i], &problem.power);
        }
        for c in &problem.constraints {
            let g = c.value(x);
            let w = mu / (-g);
            let cg = c.gradient(x, n);
            // gradient: mu / (-g) * grad g
            grad.axpy(w, &cg, 1.0);
            // Hessian: mu / g^2 * grad g grad g^T + mu / (-g) * hess g
            let scale = mu / (g * g);
            for (ri, &gv) in cg.iter().enumerate() {
                if gv == 0.0 {
                    continue;
                }
                for (ci, &gw) in cg.iter().enumerate() {
                    if gw != 0.0 {
                        hess[(ri, ci)] += scale * gv * gw;
                    }
                }
            }
            if let Constraint::SumInv { terms, .. } = c {
                for &(i, di) in terms {
                    hess[(i, i)] += w * 2.0 * di / (x[i] * x[i] * x[i]);
                }
            }
        }

        let step = match Cholesky::new(hess.clone()) {
            Some(ch) => ch.solve(&(-&grad)),
            None => {
                // tiny ridge; the Hessian is PD in exact arithmetic
                let mut h = hess;
                for i in 0..n {
                    h[(i, i)] += 1e-10 * (1.0 + h[(i, i)].abs());
                }
                match Cholesky::new(h) {
                    Some(ch) => ch.solve(&(-&grad)),
                    None => return (iter, false),
                }
            }
        };

        let phi0 = problem.barrier_value(x, mu);
        let decrement_sq = -grad.dot(&step);
        if metric_target.is_none() && decrement_sq <= 2e-9 * phi0.abs().max(1.0) {
            return (iter, true);
        }

        // backtracking line search: stay strictly feasible, then Armijo
        // with a tiny additive fudge so sub-ulp improvements still pass
        let mut t = 1.0f64;
        let slope = grad.dot(&step);
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &*x + &step * t;
            if problem.strictly_feasible(&cand)
                && problem.barrier_value(&cand, mu)
                    <= phi0 + 0.25 * t * slope + 1e-14 * phi0.abs()
            {
                *x = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // floating point has no representable descent left at this mu
            let ok = match metric_target {
                Some(target) => kkt_stationarity(problem, x, mu) <= target,
                None => decrement_sq <= 1e-4 * phi0.abs().max(1.0),
            };
            return (iter + 1, ok);
        }
    }
    let ok = match metric_target {
        Some(target) => kkt_stationarity(problem, x, mu) <= target,
        None => true, // warm-up stages hand over whatever they reached
    };
    (opts.max_newton_per_stage, ok)
}

/// KKT stationarity residual
/// `||grad f + sum_j lambda_j grad g_j||_inf / max(1, ||grad f||_inf)`.
///
/// Multipliers for clearly inactive constraints are the barrier duals
/// `mu / (-g_j)`, which are accurate when the slack is large. Near-active
/// constraints sit so deep in the boundary layer that their barrier duals
/// are floating-point noise, so their multipliers are instead fitted by
/// nonnegative least squares against the remaining gradient.
fn kkt_stationarity(problem: &BarrierProblem, x: &DVector<f64>, mu: f64) -> f64 {
    let n = problem.n;
    let grad_f = problem.objective_gradient(x);
    let scale = grad_f.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);

    // target = grad f + (barrier duals of the inactive set) * their grads
    let mut target = grad_f;
    let mut active: Vec<&Constraint> = Vec::new();
    for c in &problem.constraints {
        let g = c.value(x);
        let mag = match c {
            Constraint::Lin { terms, bound } => {
                terms.iter().map(|&(i, a)| (a * x[i]).abs()).sum::<f64>() + bound.abs()
            }
            Constraint::SumInv { terms, bound } => {
                terms.iter().map(|&(i, d)| (d / x[i]).abs()).sum::<f64>() + bound.abs()
            }
        };
        if -g <= 1e-4 * mag.max(1.0) {
            active.push(c);
        } else {
            c.add_scaled_gradient(x, mu / (-g), &mut target);
        }
    }
    if active.is_empty() {
        return target.iter().fold(0.0f64, |m, &v| m.max(v.abs())) / scale;
    }

    // min || target + J lambda || over lambda >= 0 (one clamp-and-refit pass)
    let residual_with = |keep: &[&Constraint]| -> (DVector<f64>, DVector<f64>) {
        let m = keep.len();
        let mut jac = DMatrix::zeros(n, m);
        for (col, c) in keep.iter().enumerate() {
            jac.set_column(col, &c.gradient(x, n));
        }
        let jt = jac.transpose();
        let mut normal = &jt * &jac;
        for i in 0..m {
            normal[(i, i)] += 1e-12 * (1.0 + normal[(i, i)].abs());
        }
        let rhs = &jt * (-&target);
        let lambda = Cholesky::new(normal)
            .map(|ch| ch.solve(&rhs))
            .unwrap_or_else(|| DVector::zeros(m));
        let r = &target + &jac * &lambda;
        (lambda, r)
    };

    let (lambda, r) = residual_with(&active);
    let keep: Vec<&Constraint> = active
        .iter()
        .zip(lambda.iter())
        .filter(|(_, &l)| l > 0.0)
        .map(|(&c, _)| c)
        .collect();
    let r = if keep.len() == active.len() || keep.is_empty() {
        r
    } else {
        residual_with(&keep).1
    };
    r.iter().fold(0.0f64, |m, &v| m.max(v.abs())) / scale
}
