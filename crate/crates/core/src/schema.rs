//! Scenario document schema: the JSON shape accepted on disk, with
//! dB-suffixed alternatives for the channel quantities conventionally
//! quoted in decibels. Parsing and emission work on strings; file I/O
//! stays in the command-line layer.

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, dbm_to_watts, ChannelParams};
use crate::energy::{find_v_hover, PowerModelParams};
use crate::error::{Error, Result};
use crate::scenario::{GroundUser, Scenario, UavParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub depot: [f64; 2],
    pub users: Vec<UserDoc>,
    pub uav: UavDoc,
    pub channel: ChannelDoc,
    #[serde(default)]
    pub power: Option<PowerModelParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserDoc {
    pub pos: [f64; 2],
    pub q_bits: f64,
    pub eta_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavDoc {
    pub altitude_m: f64,
    pub v_max: f64,
    pub delta_v: f64,
    /// Circling speed while serving; computed as the power-curve minimizer
    /// when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_hover: Option<f64>,
    pub p_com_w: f64,
    pub energy_budget_j: f64,
}

/// Channel section. `mu0`/`noise_w`/`rician_g` take linear SI values;
/// each has a dB-suffixed alternative (`mu0_db`, `noise_dbm`,
/// `rician_g_db`). Exactly one spelling per quantity must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDoc {
    pub bandwidth_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0_db: Option<f64>,
    pub pathloss_exp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rician_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rician_g_db: Option<f64>,
    pub epsilon: f64,
}

fn pick_linear(
    name: &str,
    linear: Option<f64>,
    db: Option<f64>,
    convert: impl Fn(f64) -> f64,
) -> Result<f64> {
    match (linear, db) {
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(convert(v)),
        (Some(_), Some(_)) => Err(Error::Parse(format!(
            "channel.{name}: give either the linear or the dB form, not both"
        ))),
        (None, None) => Err(Error::Parse(format!(
            "channel.{name}: missing (linear or dB form required)"
        ))),
    }
}

impl ScenarioDoc {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Parse(format!("scenario: {e}")))
    }

    /// Validates and lowers the document into a [`Scenario`].
    pub fn into_scenario(self) -> Result<Scenario> {
        let channel = ChannelParams {
            bandwidth_hz: self.channel.bandwidth_hz,
            mu0: pick_linear("mu0", self.channel.mu0, self.channel.mu0_db, db_to_linear)?,
            pathloss_exp: self.channel.pathloss_exp,
            noise_w: pick_linear(
                "noise_w",
                self.channel.noise_w,
                self.channel.noise_dbm,
                dbm_to_watts,
            )?,
            rician_g: pick_linear(
                "rician_g",
                self.channel.rician_g,
                self.channel.rician_g_db,
                db_to_linear,
            )?,
            epsilon: self.channel.epsilon,
        };
        let power = self.power.unwrap_or_default();
        let v_hover = match self.uav.v_hover {
            Some(v) => v,
            None => find_v_hover(&power, self.uav.v_max)?,
        };
        let uav = UavParams {
            altitude_m: self.uav.altitude_m,
            v_max: self.uav.v_max,
            delta_v: self.uav.delta_v,
            v_hover,
            p_com_w: self.uav.p_com_w,
            energy_budget_j: self.uav.energy_budget_j,
        };
        let users = self
            .users
            .into_iter()
            .enumerate()
            .map(|(i, u)| GroundUser {
                id: i + 1,
                position: u.pos,
                data_bits: u.q_bits,
                deadline_s: u.eta_s,
            })
            .collect();
        Scenario::new(self.depot, users, uav, channel, power)
    }

    /// Rebuilds a document (linear channel spellings) from a scenario.
    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioDoc {
            depot: s.depot,
            users: s
                .users
                .iter()
                .map(|u| UserDoc {
                    pos: u.position,
                    q_bits: u.data_bits,
                    eta_s: u.deadline_s,
                })
                .collect(),
            uav: UavDoc {
                altitude_m: s.uav.altitude_m,
                v_max: s.uav.v_max,
                delta_v: s.uav.delta_v,
                v_hover: Some(s.uav.v_hover),
                p_com_w: s.uav.p_com_w,
                energy_budget_j: s.uav.energy_budget_j,
            },
            channel: ChannelDoc {
                bandwidth_hz: s.channel.bandwidth_hz,
                mu0: Some(s.channel.mu0),
                mu0_db: None,
                pathloss_exp: s.channel.pathloss_exp,
                noise_w: Some(s.channel.noise_w),
                noise_dbm: None,
                rician_g: Some(s.channel.rician_g),
                rician_g_db: None,
                epsilon: s.channel.epsilon,
            },
            power: Some(s.power.clone()),
        }
    }
}

/// Parses an experiment config document (strict: unknown keys rejected).
pub fn parse_experiment_config(json: &str) -> Result<crate::experiment::ExperimentConfig> {
    let cfg: crate::experiment::ExperimentConfig =
        serde_json::from_str(json).map_err(|e| Error::Parse(format!("config: {e}")))?;
    let issues = cfg.validate();
    if !issues.is_empty() {
        return Err(Error::InvalidScenario(issues));
    }
    Ok(cfg)
}
