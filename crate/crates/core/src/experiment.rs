//! Monte-Carlo trial runner: random topologies, uniform deadlines,
//! per-method outage and energy statistics, and runtime measurement.
//!
//! Every quantity except wall-clock timing is a pure function of the
//! config and the master seed. Trials derive their seeds by index, run on
//! a worker pool, and are collected back in trial order before any
//! aggregation, so results do not depend on the pool size.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::energy::PowerModelParams;
use crate::error::{Error, Result};
use crate::planner::{
    dp_search, exhaustive_search, heuristic_search, tsp_baseline, Method, PlanningCosts,
};
use crate::scenario::{GroundUser, Scenario, UavParams};
use crate::velocity::pick_best_plan;

/// Parameter swept across a batch of Monte-Carlo runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    VMax,
    EtaMin,
    Area,
    EnergyBudget,
    KUsers,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::VMax => "v_max",
            SweepParam::EtaMin => "eta_min",
            SweepParam::Area => "area",
            SweepParam::EnergyBudget => "energy_budget",
            SweepParam::KUsers => "k_users",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Full experiment description. Unspecified fields fall back to the
/// reference setup; unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub k_users: usize,
    /// Square side length; users are sampled uniformly in `area x area`.
    pub area_m: f64,
    pub eta_min_s: f64,
    pub eta_max_s: f64,
    /// Requested content size per user, bits.
    pub q_bits: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub sweep: Option<Sweep>,
    pub uav: UavParams,
    pub channel: ChannelParams,
    pub power: PowerModelParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let power = PowerModelParams::default();
        let v_hover = crate::energy::find_v_hover(&power, 50.0).unwrap_or(10.0);
        ExperimentConfig {
            trials: 200,
            k_users: 5,
            area_m: 400.0,
            eta_min_s: 15.0,
            eta_max_s: 65.0,
            q_bits: 1.0e7,
            seed: 1,
            methods: Method::ALL.to_vec(),
            sweep: None,
            uav: UavParams {
                altitude_m: 50.0,
                v_max: 50.0,
                delta_v: 50.0,
                v_hover,
                p_com_w: 5.0,
                energy_budget_j: 5.0e5,
            },
            channel: ChannelParams::paper_defaults(),
            power,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.trials == 0 {
            issues.push("trials must be >= 1".to_string());
        }
        if self.k_users == 0 {
            issues.push("k_users must be >= 1".to_string());
        }
        if !(self.area_m > 0.0) {
            issues.push(format!("area_m must be positive, got {}", self.area_m));
        }
        if self.eta_min_s > self.eta_max_s {
            issues.push(format!(
                "eta_min_s ({}) must not exceed eta_max_s ({})",
                self.eta_min_s, self.eta_max_s
            ));
        }
        if !(self.q_bits > 0.0) {
            issues.push(format!("q_bits must be positive, got {}", self.q_bits));
        }
        if self.methods.is_empty() {
            issues.push("methods must not be empty".to_string());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                issues.push("sweep.values must not be empty".to_string());
            }
            if sweep.param == SweepParam::KUsers {
                for &v in &sweep.values {
                    if v < 1.0 || v.fract() != 0.0 {
                        issues.push(format!("k_users sweep values must be positive integers, got {v}"));
                    }
                }
            }
        }
        issues.extend(self.uav.validate());
        issues.extend(self.channel.validate());
        issues.extend(self.power.validate());
        issues
    }

    /// Applies one sweep value, returning the adjusted config.
    pub fn with_sweep_value(&self, param: SweepParam, value: f64) -> ExperimentConfig {
        let mut cfg = self.clone();
        match param {
            SweepParam::VMax => cfg.uav.v_max = value,
            SweepParam::EtaMin => cfg.eta_min_s = value,
            SweepParam::Area => cfg.area_m = value,
            SweepParam::EnergyBudget => cfg.uav.energy_budget_j = value,
            SweepParam::KUsers => cfg.k_users = value as usize,
        }
        cfg
    }
}

/// One method's outcome on one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    /// Whether a deadline- and budget-feasible plan was found.
    pub success: bool,
    /// Total energy of the selected plan, when successful.
    pub energy_j: Option<f64>,
    /// Wall-clock seconds spent in path search.
    pub plan_time_s: f64,
    /// Wall-clock seconds spent optimizing velocities over the path set.
    pub opt_time_s: f64,
    /// Velocity solves that failed inside this trial.
    pub solver_failures: usize,
}

/// All methods' outcomes on one sampled topology.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    /// False when the sampled instance fails validation (e.g. zero
    /// deadlines); every method counts as outage then.
    pub scenario_ok: bool,
    pub methods: Vec<MethodOutcome>,
}

/// Aggregates for one (sweep value, method) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialStats {
    pub sweep_value: f64,
    pub method: Method,
    /// Combined outage: channel outage target plus planning infeasibility,
    /// under independence.
    pub outage_rate: f64,
    /// Fraction of trials with no feasible in-budget plan.
    pub infeasible_rate: f64,
    /// The channel outage target used in the combination.
    pub epsilon: f64,
    pub energy_mean_j: f64,
    pub energy_min_j: f64,
    pub energy_max_j: f64,
    pub runtime_mean_s: f64,
    pub trials: usize,
}

/// Splitmix-style seed derivation: decorrelates per-trial streams from the
/// master seed without any sequential dependency.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Samples the trial topology: user positions uniform in the area square,
/// deadlines uniform in `[eta_min, eta_max]`, depot at the reference corner
/// position scaled with the area side.
fn sample_scenario(cfg: &ExperimentConfig, trial_seed: u64) -> Result<Scenario> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(trial_seed);
    let side = cfg.area_m;
    let positions: Vec<[f64; 2]> = (0..cfg.k_users)
        .map(|_| {
            let x = rng.random_range(0.0..side);
            let y = rng.random_range(0.0..side);
            [x, y]
        })
        .collect();
    let deadlines: Vec<f64> = (0..cfg.k_users)
        .map(|_| {
            if cfg.eta_max_s > cfg.eta_min_s {
                rng.random_range(cfg.eta_min_s..cfg.eta_max_s)
            } else {
                cfg.eta_min_s
            }
        })
        .collect();
    let users = positions
        .into_iter()
        .zip(deadlines)
        .enumerate()
        .map(|(i, (position, deadline_s))| GroundUser {
            id: i + 1,
            position,
            data_bits: cfg.q_bits,
            deadline_s,
        })
        .collect();
    let depot = [1.5 * side / 400.0, 398.0 * side / 400.0];
    Scenario::new(
        depot,
        users,
        cfg.uav.clone(),
        cfg.channel.clone(),
        cfg.power.clone(),
    )
}

/// Runs one trial: sample a topology, then plan -> optimize -> budget-filter
/// with every configured method. Deterministic given the trial seed, apart
/// from the recorded wall-clock times.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize, trial_seed: u64) -> TrialOutcome {
    let scenario = match sample_scenario(cfg, trial_seed) {
        Ok(s) => s,
        Err(_) => {
            return TrialOutcome {
                trial,
                scenario_ok: false,
                methods: cfg
                    .methods
                    .iter()
                    .map(|&method| MethodOutcome {
                        method,
                        success: false,
                        energy_j: None,
                        plan_time_s: 0.0,
                        opt_time_s: 0.0,
                        solver_failures: 0,
                    })
                    .collect(),
            }
        }
    };
    let costs = match PlanningCosts::from_scenario(&scenario) {
        Ok(c) => c,
        Err(_) => {
            return TrialOutcome {
                trial,
                scenario_ok: false,
                methods: Vec::new(),
            }
        }
    };

    let methods = cfg
        .methods
        .iter()
        .map(|&method| {
            let t0 = Instant::now();
            let set = match method {
                // inside the harness the exhaustive planner keeps every
                // feasible path, making it an upper bound for the others
                Method::Exhaustive => exhaustive_search(&costs, usize::MAX),
                Method::Heuristic => Ok(heuristic_search(&costs)),
                Method::Dp => dp_search(&costs),
                Method::Tsp => tsp_baseline(&costs),
            };
            let plan_time_s = t0.elapsed().as_secs_f64();
            match set {
                Ok(set) => {
                    // a deadline-infeasible baseline tour is an outage
                    let keep: Vec<usize> = (0..set.tours.len())
                        .filter(|&i| set.deadline_feasible[i])
                        .collect();
                    let t1 = Instant::now();
                    let (selection, failures) = if keep.len() == set.tours.len() {
                        let sel = pick_best_plan(&set, &scenario);
                        let f = sel.solver_failures;
                        (sel.best, f)
                    } else {
                        let filtered = crate::planner::FeasiblePathSet {
                            method: set.method,
                            tours: keep.iter().map(|&i| set.tours[i].clone()).collect(),
                            travel_times: keep.iter().map(|&i| set.travel_times[i]).collect(),
                            deadline_feasible: vec![true; keep.len()],
                        };
                        let sel = pick_best_plan(&filtered, &scenario);
                        let f = sel.solver_failures;
                        (sel.best, f)
                    };
                    let opt_time_s = t1.elapsed().as_secs_f64();
                    MethodOutcome {
                        method,
                        success: selection.is_some(),
                        energy_j: selection.map(|p| p.energy.total_j),
                        plan_time_s,
                        opt_time_s,
                        solver_failures: failures,
                    }
                }
                Err(_) => MethodOutcome {
                    method,
                    success: false,
                    energy_j: None,
                    plan_time_s,
                    opt_time_s: 0.0,
                    solver_failures: 1,
                },
            }
        })
        .collect();

    TrialOutcome {
        trial,
        scenario_ok: true,
        methods,
    }
}

/// Runs all trials of one config on the ambient worker pool, returned in
/// trial order regardless of scheduling.
pub fn run_trials(cfg: &ExperimentConfig) -> Vec<TrialOutcome> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i, derive_seed(cfg.seed, i as u64)))
        .collect()
}

/// Combined outage under independence of the channel target and planning
/// infeasibility: `1 - (1 - epsilon)(1 - infeasible_rate)`. Callers keep
/// both raw components alongside.
pub fn combined_outage(infeasible_rate: f64, epsilon: f64) -> f64 {
    1.0 - (1.0 - epsilon) * (1.0 - infeasible_rate)
}

fn aggregate(
    sweep_value: f64,
    cfg: &ExperimentConfig,
    outcomes: &[TrialOutcome],
) -> Vec<TrialStats> {
    cfg.methods
        .iter()
        .map(|&method| {
            let mut successes = 0usize;
            let mut sum = 0.0f64;
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            let mut runtime_sum = 0.0f64;
            for o in outcomes {
                if let Some(m) = o.methods.iter().find(|m| m.method == method) {
                    runtime_sum += m.plan_time_s + m.opt_time_s;
                    if let (true, Some(e)) = (m.success, m.energy_j) {
                        successes += 1;
                        sum += e;
                        min = min.min(e);
                        max = max.max(e);
                    }
                }
            }
            let trials = outcomes.len();
            let infeasible_rate = 1.0 - successes as f64 / trials as f64;
            let (energy_mean_j, energy_min_j, energy_max_j) = if successes > 0 {
                (sum / successes as f64, min, max)
            } else {
                (0.0, 0.0, 0.0)
            };
            TrialStats {
                sweep_value,
                method,
                outage_rate: combined_outage(infeasible_rate, cfg.channel.epsilon),
                infeasible_rate,
                epsilon: cfg.channel.epsilon,
                energy_mean_j,
                energy_min_j,
                energy_max_j,
                runtime_mean_s: runtime_sum / trials as f64,
                trials,
            }
        })
        .collect()
}

/// Runs the configured sweep, one batch of trials per value, and aggregates
/// per-method statistics. Without a sweep, a single batch is run and
/// reported under sweep value 0.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialStats>> {
    let issues = cfg.validate();
    if !issues.is_empty() {
        return Err(Error::InvalidScenario(issues));
    }
    let mut rows = Vec::new();
    match &cfg.sweep {
        Some(sweep) => {
            for &value in &sweep.values {
                let sub = cfg.with_sweep_value(sweep.param, value);
                let issues = sub.validate();
                if !issues.is_empty() {
                    return Err(Error::InvalidScenario(issues));
                }
                let outcomes = run_trials(&sub);
                rows.extend(aggregate(value, &sub, &outcomes));
            }
        }
        None => {
            let outcomes = run_trials(cfg);
            rows.extend(aggregate(0.0, cfg, &outcomes));
        }
    }
    Ok(rows)
}

/// One runtime-benchmark cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub k: usize,
    pub method: Method,
    pub runtime_mean_s: f64,
    pub trials: usize,
}

/// Mean wall-clock path-search time per method per instance size, on fully
/// feasible random instances (deadlines effectively unbounded, so every
/// planner does its worst-case work). Runs single-threaded; methods are
/// skipped above their size caps.
pub fn runtime_benchmark(k_range: &[usize], trials: usize, seed: u64) -> Result<Vec<BenchRow>> {
    use rand::Rng;
    use rand::SeedableRng;
    if trials == 0 {
        return Err(Error::invalid_argument("trials must be >= 1"));
    }
    let mut rows = Vec::new();
    for &k in k_range {
        let instances: Vec<PlanningCosts> = (0..trials)
            .map(|t| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(
                    seed,
                    (k as u64) << 32 | t as u64,
                ));
                let pts: Vec<[f64; 2]> = (0..=k)
                    .map(|_| [rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)])
                    .collect();
                let mut m = crate::scenario::Matrix::zeros(k + 1);
                for j in 0..=k {
                    for l in 0..=k {
                        if j == l {
                            m.set(j, l, f64::INFINITY);
                        } else {
                            let dx = pts[j][0] - pts[l][0];
                            let dy = pts[j][1] - pts[l][1];
                            let tau = if l == 0 { 0.0 } else { 0.2 };
                            m.set(j, l, (dx * dx + dy * dy).sqrt() / 50.0 + tau);
                        }
                    }
                }
                PlanningCosts::new(m, vec![1.0e9; k]).unwrap()
            })
            .collect();

        for method in Method::ALL {
            let applicable = match method {
                Method::Exhaustive => k <= crate::planner::EXHAUSTIVE_USER_CAP,
                Method::Dp | Method::Tsp => k <= crate::planner::DP_USER_CAP,
                Method::Heuristic => true,
            };
            if !applicable {
                continue;
            }
            let run = |c: &PlanningCosts| match method {
                Method::Exhaustive => {
                    exhaustive_search(c, usize::MAX).map(|s| s.tours.len()).unwrap_or(0)
                }
                Method::Heuristic => heuristic_search(c).tours.len(),
                Method::Dp => dp_search(c).map(|s| s.tours.len()).unwrap_or(0),
                Method::Tsp => tsp_baseline(c).map(|s| s.tours.len()).unwrap_or(0),
            };
            // warmup, then timed passes
            let _ = run(&instances[0]);
            let t0 = Instant::now();
            let mut sink = 0usize;
            for c in &instances {
                sink = sink.wrapping_add(run(c));
            }
            let elapsed = t0.elapsed().as_secs_f64();
            std::hint::black_box(sink);
            rows.push(BenchRow {
                k,
                method,
                runtime_mean_s: elapsed / trials as f64,
                trials,
            });
        }
    }
    Ok(rows)
}

/// Named sweep configurations mirroring the reference experiment captions;
/// unstated values inherit the base setup. Desk-scale trial counts.
pub fn sweep_preset(name: &str) -> Option<ExperimentConfig> {
    let base = ExperimentConfig::default();
    let cfg = match name {
        // outage vs maximum speed
        "fig5" => ExperimentConfig {
            k_users: 6,
            eta_min_s: 22.0,
            eta_max_s: 60.0,
            channel: ChannelParams {
                bandwidth_hz: 3.0e6,
                ..ChannelParams::paper_defaults()
            },
            sweep: Some(Sweep {
                param: SweepParam::VMax,
                values: vec![30.0, 35.0, 40.0, 45.0, 50.0],
            }),
            ..base
        },
        // outage vs minimum requested timeout
        "fig6" => ExperimentConfig {
            k_users: 6,
            eta_max_s: 65.0,
            channel: ChannelParams {
                bandwidth_hz: 3.0e6,
                ..ChannelParams::paper_defaults()
            },
            uav: UavParams {
                v_max: 45.0,
                delta_v: 45.0,
                ..ExperimentConfig::default().uav
            },
            sweep: Some(Sweep {
                param: SweepParam::EtaMin,
                values: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            }),
            ..base
        },
        // outage vs network size
        "fig7" => ExperimentConfig {
            k_users: 7,
            eta_min_s: 15.0,
            eta_max_s: 65.0,
            channel: ChannelParams {
                bandwidth_hz: 3.0e6,
                ..ChannelParams::paper_defaults()
            },
            uav: UavParams {
                v_max: 45.0,
                delta_v: 45.0,
                ..ExperimentConfig::default().uav
            },
            sweep: Some(Sweep {
                param: SweepParam::Area,
                values: vec![200.0, 400.0, 600.0, 800.0],
            }),
            ..base
        },
        // outage vs energy budget
        "fig8" => ExperimentConfig {
            k_users: 4,
            eta_min_s: 3.0,
            eta_max_s: 15.0,
            sweep: Some(Sweep {
                param: SweepParam::EnergyBudget,
                values: vec![6.0e3, 9.0e3, 12.0e3, 15.0e3, 20.0e3],
            }),
            ..base
        },
        // energy vs number of users
        "fig9" => ExperimentConfig {
            eta_min_s: 3.0,
            eta_max_s: 15.0,
            sweep: Some(Sweep {
                param: SweepParam::KUsers,
                values: vec![3.0, 4.0, 5.0, 6.0],
            }),
            ..base
        },
        // energy vs network size
        "fig10" => ExperimentConfig {
            k_users: 4,
            eta_min_s: 15.0,
            eta_max_s: 60.0,
            sweep: Some(Sweep {
                param: SweepParam::Area,
                values: vec![200.0, 300.0, 400.0, 500.0, 600.0],
            }),
            ..base
        },
        _ => return None,
    };
    Some(cfg)
}

pub fn sweep_preset_names() -> &'static [&'static str] {
    &["fig5", "fig6", "fig7", "fig8", "fig9", "fig10"]
}
