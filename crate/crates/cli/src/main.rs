//! Command-line front end: scenario/config parsing, validation, and
//! byte-stable CSV/JSON emission. This binary is the only place in the
//! workspace that touches files or the terminal.
//!
//! Exit codes: 0 success; 1 a fully run plan found no feasible result
//! (a legitimate outcome, not an error); 2 usage, parse, validation, or
//! I/O error; 3 numeric failure.

// float validations use `!(v > 0.0)` so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use uav_tsptw::emit;
use uav_tsptw::energy::{find_v_hover, p_fly, PowerModelParams};
use uav_tsptw::error::Error;
use uav_tsptw::experiment::{
    run_sweep, runtime_benchmark, sweep_preset, sweep_preset_names, ExperimentConfig,
};
use uav_tsptw::planner::{
    dp_search, exhaustive_search, heuristic_search, tsp_baseline, Method, PlanningCosts, Tour,
};
use uav_tsptw::schema::{parse_experiment_config, ScenarioDoc};
use uav_tsptw::scenario::Scenario;
use uav_tsptw::velocity::optimize_velocities;

#[derive(Parser)]
#[command(name = "uav-tsptw", version, about = "Deadline-constrained UAV tour planning and energy optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search deadline-feasible visiting orders at v_max.
    Plan {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// exhaustive | heuristic | dp | tsp | all
        #[arg(long, default_value = "all")]
        method: String,
        /// How many shortest feasible tours the exhaustive search keeps
        /// (defaults to the number of users).
        #[arg(long)]
        psi: Option<usize>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize per-hop speeds for a fixed tour.
    Optimize {
        #[arg(long)]
        scenario: PathBuf,
        /// Visiting order as comma-separated user ids, e.g. `2,1,3`.
        #[arg(long)]
        tour: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo sweep and write CSV + sidecar metadata.
    Simulate {
        /// Experiment config JSON (see the README for the schema).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named preset (fig5..fig10); may be combined with overrides.
        #[arg(long)]
        preset: Option<String>,
        /// Output directory for the CSV and sidecar.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Master seed (an integer, or `auto` for an entropy seed).
        #[arg(long)]
        seed: Option<String>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Include measured wall-clock means in the CSV runtime column.
        /// Off by default so that fixed seeds give byte-identical output.
        #[arg(long)]
        timing: bool,
    },
    /// Measure planner runtimes across instance sizes.
    Bench {
        #[arg(long, default_value_t = 3)]
        k_min: usize,
        #[arg(long, default_value_t = 9)]
        k_max: usize,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// `fig11` selects the runtime-versus-size comparison range.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the propulsion power curve as CSV over a speed grid.
    PowerCurve {
        /// Read power-model constants from this scenario file
        /// (defaults to the built-in reference rotor constants).
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 60.0)]
        v_max: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file against every invariant and report.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    configure_worker_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::NumericFailure { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

/// `UAV_TSPTW_THREADS` caps the worker pool used by the simulation harness.
fn configure_worker_pool() {
    if let Ok(raw) = std::env::var("UAV_TSPTW_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid UAV_TSPTW_THREADS={raw}"),
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Plan {
            scenario,
            method,
            psi,
            out,
        } => cmd_plan(&scenario, &method, psi, out.as_deref()),
        Command::Optimize {
            scenario,
            tour,
            out,
        } => cmd_optimize(&scenario, &tour, out.as_deref()),
        Command::Simulate {
            config,
            preset,
            out,
            seed,
            trials,
            timing,
        } => cmd_simulate(config.as_deref(), preset.as_deref(), &out, seed, trials, timing),
        Command::Bench {
            k_min,
            k_max,
            trials,
            seed,
            preset,
            out,
        } => {
            let (k_min, k_max) = match preset.as_deref() {
                Some("fig11") => (3, 9),
                Some(other) => {
                    return Err(Error::invalid_argument(format!(
                        "unknown bench preset `{other}` (available: fig11)"
                    )))
                }
                None => (k_min, k_max),
            };
            cmd_bench(k_min, k_max, trials, seed, out.as_deref())
        }
        Command::PowerCurve {
            scenario,
            v_max,
            step,
            out,
        } => cmd_power_curve(scenario.as_deref(), v_max, step, out.as_deref()),
        Command::Validate { scenario } => cmd_validate(&scenario),
    }
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    ScenarioDoc::parse(&read_to_string(path)?)?.into_scenario()
}

fn write_output(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_methods(raw: &str) -> Result<Vec<Method>, Error> {
    if raw == "all" {
        return Ok(Method::ALL.to_vec());
    }
    raw.split(',').map(|m| m.trim().parse()).collect()
}

fn cmd_plan(
    scenario_path: &Path,
    method: &str,
    psi: Option<usize>,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let s = load_scenario(scenario_path)?;
    let costs = PlanningCosts::from_scenario(&s)?;
    let methods = parse_methods(method)?;
    let psi = psi.unwrap_or(s.num_users().max(1));

    let mut reports = Vec::new();
    let mut any_found = false;
    for m in methods {
        let set = match m {
            Method::Exhaustive => exhaustive_search(&costs, psi)?,
            Method::Heuristic => heuristic_search(&costs),
            Method::Dp => dp_search(&costs)?,
            Method::Tsp => tsp_baseline(&costs)?,
        };
        any_found |= set
            .deadline_feasible
            .iter()
            .any(|&f| f);
        reports.push(json!({
            "method": m.name(),
            "tours": set.tours.iter().map(|t| t.order.clone()).collect::<Vec<_>>(),
            "travel_times_s": set.travel_times,
            "deadline_feasible": set.deadline_feasible,
        }));
    }

    let doc = json!({
        "scenario": scenario_path.display().to_string(),
        "v_max": s.uav.v_max,
        "psi": psi,
        "methods": reports,
    });
    write_output(&emit::to_json_string(&doc), out)?;
    Ok(if any_found {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn parse_tour(raw: &str) -> Result<Tour, Error> {
    let order = raw
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid_argument(format!("bad user id `{t}` in --tour")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Tour::new(order))
}

fn cmd_optimize(
    scenario_path: &Path,
    tour_raw: &str,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let s = load_scenario(scenario_path)?;
    let tour = parse_tour(tour_raw)?;
    {
        // the tour must visit every user exactly once
        let mut seen = vec![false; s.num_users() + 1];
        for &u in &tour.order {
            if u == 0 || u > s.num_users() || seen[u] {
                return Err(Error::invalid_argument(format!(
                    "--tour must be a permutation of 1..={}, got {tour_raw}",
                    s.num_users()
                )));
            }
            seen[u] = true;
        }
        if tour.order.len() != s.num_users() {
            return Err(Error::invalid_argument(format!(
                "--tour must visit all {} users, got {tour_raw}",
                s.num_users()
            )));
        }
    }

    match optimize_velocities(&tour, &s) {
        Ok(report) => {
            let arrivals = s.arrival_times(&tour.order, &report.profile.speeds)?;
            let doc = json!({
                "feasible": true,
                "tour": tour.order,
                "speeds_mps": report.profile.speeds,
                "arrival_times_s": arrivals,
                "energy": {
                    "fly_j": report.energy.fly_j,
                    "hover_j": report.energy.hover_j,
                    "comm_j": report.energy.comm_j,
                    "total_j": report.energy.total_j,
                },
                "within_budget": report.energy.total_j <= s.uav.energy_budget_j,
                "iterations": report.iterations,
                "kkt_residual": report.kkt_residual,
                "converged": report.converged,
            });
            write_output(&emit::to_json_string(&doc), out)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(Error::InfeasibleInput(reason)) => {
            let doc = json!({ "feasible": false, "reason": reason });
            write_output(&emit::to_json_string(&doc), out)?;
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e),
    }
}

fn cmd_simulate(
    config_path: Option<&Path>,
    preset: Option<&str>,
    out_dir: &Path,
    seed: Option<String>,
    trials: Option<usize>,
    timing: bool,
) -> Result<ExitCode, Error> {
    let mut cfg: ExperimentConfig = match (preset, config_path) {
        (Some(name), None) => sweep_preset(name).ok_or_else(|| {
            Error::invalid_argument(format!(
                "unknown preset `{name}` (available: {}; fig11 is the runtime study, see `bench`)",
                sweep_preset_names().join(", ")
            ))
        })?,
        (None, Some(path)) => parse_experiment_config(&read_to_string(path)?)?,
        (None, None) => ExperimentConfig::default(),
        (Some(_), Some(_)) => {
            return Err(Error::invalid_argument(
                "--preset and --config are mutually exclusive",
            ))
        }
    };
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(raw) = seed {
        cfg.seed = if raw == "auto" {
            rand::random::<u64>()
        } else {
            raw.parse().map_err(|_| {
                Error::invalid_argument(format!("--seed must be an integer or `auto`, got {raw}"))
            })?
        };
    }
    eprintln!("seed = {}", cfg.seed);

    let rows = run_sweep(&cfg)?;
    let sweep_name = cfg
        .sweep
        .as_ref()
        .map(|s| s.param.name())
        .unwrap_or("none");

    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Parse(format!("cannot create {}: {e}", out_dir.display())))?;
    let csv_path = out_dir.join(format!("sweep_{sweep_name}.csv"));
    let meta_path = out_dir.join(format!("sweep_{sweep_name}_meta.json"));

    write_output(&emit::sweep_csv(&rows, timing), Some(&csv_path))?;

    // the sidecar mirrors the CSV timing policy so fixed seeds stay
    // byte-stable end to end
    let sidecar_rows: Vec<_> = rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if !timing {
                r.runtime_mean_s = 0.0;
            }
            r
        })
        .collect();
    let meta = json!({
        "config": serde_json::to_value(&cfg).map_err(|e| Error::Parse(e.to_string()))?,
        "seed": cfg.seed,
        "sweep_param": sweep_name,
        "timing": timing,
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": git_describe(),
        "rows": serde_json::to_value(&sidecar_rows).map_err(|e| Error::Parse(e.to_string()))?,
    });
    write_output(&emit::to_json_string(&meta), Some(&meta_path))?;

    eprintln!("wrote {}", csv_path.display());
    eprintln!("wrote {}", meta_path.display());
    Ok(ExitCode::SUCCESS)
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

fn cmd_bench(
    k_min: usize,
    k_max: usize,
    trials: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::invalid_argument(format!(
            "need 1 <= k_min <= k_max, got {k_min}..{k_max}"
        )));
    }
    let k_range: Vec<usize> = (k_min..=k_max).collect();
    let rows = runtime_benchmark(&k_range, trials, seed)?;
    write_output(&emit::bench_csv(&rows), out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_power_curve(
    scenario_path: Option<&Path>,
    v_max: f64,
    step: f64,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    if !(step > 0.0) || !(v_max > 0.0) {
        return Err(Error::invalid_argument(format!(
            "need positive --v-max and --step, got {v_max} and {step}"
        )));
    }
    let power: PowerModelParams = match scenario_path {
        Some(path) => load_scenario(path)?.power,
        None => PowerModelParams::default(),
    };
    let mut points = Vec::new();
    let mut i = 0usize;
    loop {
        let v = i as f64 * step;
        if v > v_max + 1e-12 {
            break;
        }
        points.push((v, p_fly(v, &power)));
        i += 1;
    }
    write_output(&emit::power_curve_csv(&points), out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(scenario_path: &Path) -> Result<ExitCode, Error> {
    let text = read_to_string(scenario_path)?;
    let doc = ScenarioDoc::parse(&text)?;
    match doc.into_scenario() {
        Ok(s) => {
            let tau = s.service_times();
            let (tau_min, tau_max) = tau
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
            println!("scenario OK: {} users", s.num_users());
            println!("  outage-constrained rate: {} bit/s", emit::format_sig9(s.rate_bps()));
            println!(
                "  service times: {} .. {} s",
                emit::format_sig9(tau_min),
                emit::format_sig9(tau_max)
            );
            println!(
                "  v_max {} m/s, v_hover {} m/s (power minimum at {} m/s)",
                emit::format_sig9(s.uav.v_max),
                emit::format_sig9(s.uav.v_hover),
                emit::format_sig9(find_v_hover(&s.power, s.uav.v_max)?)
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(Error::InvalidScenario(issues)) => {
            eprintln!("scenario INVALID: {} issue(s)", issues.len());
            for issue in issues {
                eprintln!("  - {issue}");
            }
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e),
    }
}
