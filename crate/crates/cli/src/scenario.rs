//! Scenario files: flat TOML, one key per parameter, units in the key suffix.
//! Every key is optional; anything left out takes its reference value.

use hetnet_core::engine::{default_demand_mix, DemandClass};
use hetnet_core::mobility::LevyParams;
use hetnet_core::model::{Demand, NetworkParams, PathLossExponents};
use hetnet_core::tdd::Rounding;
use hetnet_core::{Algorithm, Rect, Scenario, Vec2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad --sweep `{0}`: expected key=v1,v2,...")]
    SweepSyntax(String),
    #[error("--sweep {key}={value}: {message}")]
    SweepValue {
        key: String,
        value: String,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandEntry {
    pub ul_mbps: f64,
    pub dl_mbps: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(alias = "n_users")]
    pub users: usize,
    pub slots: u64,
    pub seeds: Vec<u64>,
    pub algorithm: Algorithm,
    pub rounding: Rounding,

    pub area_min_m: [f64; 2],
    pub area_max_m: [f64; 2],
    pub mbs_positions_m: Vec<[f64; 2]>,
    pub pbs_count: usize,
    pub pbs_positions_m: Vec<[f64; 2]>,
    pub macro_carrier_hz: f64,
    pub pico_carrier_hz: f64,
    pub macro_subchannel_count: usize,
    pub pico_subchannel_count: usize,
    pub macro_subchannel_bandwidth_hz: f64,
    pub pico_subchannel_bandwidth_hz: f64,
    pub macro_tx_power_dbm: f64,
    pub pico_tx_power_dbm: f64,
    pub user_tx_power_dbm: f64,
    pub pico_directivity_dbi: f64,
    pub pico_beam_deg: f64,
    pub pico_sector_deg: f64,
    pub user_directivity_dbi: f64,
    pub user_beam_deg: f64,
    pub user_sector_deg: f64,
    pub n_subslots: usize,
    pub slot_duration_us: f64,
    pub pilot_time_us: f64,
    pub obstacle_density: f64,
    pub obstacle_mean_length_m: f64,
    pub noise_psd_dbm_hz: f64,
    pub ple_los_lte: f64,
    pub ple_nlos_lte: f64,
    pub ple_los_mmw: f64,
    pub ple_nlos_mmw: f64,
    pub levy_beta_f: f64,
    pub levy_beta_r: f64,
    pub levy_k_short: f64,
    pub levy_rho_short: f64,
    pub levy_k_long: f64,
    pub levy_rho_long: f64,
    pub levy_flight_cutoff_m: f64,
    pub demand: Vec<DemandEntry>,
}

fn pair(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn point(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

impl Default for ScenarioFile {
    fn default() -> Self {
        let s = Scenario::default();
        let n = &s.network;
        Self {
            users: s.users,
            slots: s.slots,
            seeds: s.seeds,
            algorithm: s.algorithm,
            rounding: s.rounding,
            area_min_m: pair(n.area.min),
            area_max_m: pair(n.area.max),
            mbs_positions_m: n.mbs_positions.iter().copied().map(pair).collect(),
            pbs_count: n.pbs_count,
            pbs_positions_m: n.pbs_positions.iter().copied().map(pair).collect(),
            macro_carrier_hz: n.macro_carrier_hz,
            pico_carrier_hz: n.pico_carrier_hz,
            macro_subchannel_count: n.macro_subchannel_count,
            pico_subchannel_count: n.pico_subchannel_count,
            macro_subchannel_bandwidth_hz: n.macro_subchannel_bandwidth_hz,
            pico_subchannel_bandwidth_hz: n.pico_subchannel_bandwidth_hz,
            macro_tx_power_dbm: n.macro_tx_power_dbm,
            pico_tx_power_dbm: n.pico_tx_power_dbm,
            user_tx_power_dbm: n.user_tx_power_dbm,
            pico_directivity_dbi: n.pico_directivity_dbi,
            pico_beam_deg: n.pico_beam_deg,
            pico_sector_deg: n.pico_sector_deg,
            user_directivity_dbi: n.user_directivity_dbi,
            user_beam_deg: n.user_beam_deg,
            user_sector_deg: n.user_sector_deg,
            n_subslots: n.n_subslots,
            slot_duration_us: n.slot_duration_us,
            pilot_time_us: n.pilot_time_us,
            obstacle_density: n.obstacle_density,
            obstacle_mean_length_m: n.obstacle_mean_length_m,
            noise_psd_dbm_hz: n.noise_psd_dbm_hz,
            ple_los_lte: n.ple.los_lte,
            ple_nlos_lte: n.ple.nlos_lte,
            ple_los_mmw: n.ple.los_mmw,
            ple_nlos_mmw: n.ple.nlos_mmw,
            levy_beta_f: n.levy.beta_f,
            levy_beta_r: n.levy.beta_r,
            levy_k_short: n.levy.k_short,
            levy_rho_short: n.levy.rho_short,
            levy_k_long: n.levy.k_long,
            levy_rho_long: n.levy.rho_long,
            levy_flight_cutoff_m: n.levy.flight_cutoff_m,
            demand: default_demand_mix()
                .into_iter()
                .map(|c| DemandEntry {
                    ul_mbps: c.demand.ul_bps / 1e6,
                    dl_mbps: c.demand.dl_bps / 1e6,
                    weight: c.weight,
                })
                .collect(),
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Copy with one key replaced; the value is read as a TOML literal, or as
    /// a bare string when that fails (so `algorithm=lcuas` works unquoted).
    pub fn with(&self, key: &str, value: &str) -> Result<Self, ScenarioError> {
        let bad = |message: String| ScenarioError::SweepValue {
            key: key.to_string(),
            value: value.to_string(),
            message,
        };
        let mut table = toml::Table::try_from(self).map_err(|e| bad(e.to_string()))?;
        if !table.contains_key(key) && key != "n_users" {
            return Err(bad("unknown scenario key".into()));
        }
        let key = if key == "n_users" { "users" } else { key };
        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(key.to_string(), parsed);
        table
            .try_into()
            .map_err(|e: toml::de::Error| bad(e.message().to_string()))
    }

    pub fn network(&self) -> NetworkParams {
        NetworkParams {
            area: Rect::new(point(self.area_min_m), point(self.area_max_m)),
            mbs_positions: self.mbs_positions_m.iter().copied().map(point).collect(),
            pbs_count: self.pbs_count,
            pbs_positions: self.pbs_positions_m.iter().copied().map(point).collect(),
            macro_carrier_hz: self.macro_carrier_hz,
            pico_carrier_hz: self.pico_carrier_hz,
            macro_subchannel_count: self.macro_subchannel_count,
            pico_subchannel_count: self.pico_subchannel_count,
            macro_subchannel_bandwidth_hz: self.macro_subchannel_bandwidth_hz,
            pico_subchannel_bandwidth_hz: self.pico_subchannel_bandwidth_hz,
            macro_tx_power_dbm: self.macro_tx_power_dbm,
            pico_tx_power_dbm: self.pico_tx_power_dbm,
            user_tx_power_dbm: self.user_tx_power_dbm,
            pico_directivity_dbi: self.pico_directivity_dbi,
            pico_beam_deg: self.pico_beam_deg,
            pico_sector_deg: self.pico_sector_deg,
            user_directivity_dbi: self.user_directivity_dbi,
            user_beam_deg: self.user_beam_deg,
            user_sector_deg: self.user_sector_deg,
            n_subslots: self.n_subslots,
            slot_duration_us: self.slot_duration_us,
            pilot_time_us: self.pilot_time_us,
            obstacle_density: self.obstacle_density,
            obstacle_mean_length_m: self.obstacle_mean_length_m,
            noise_psd_dbm_hz: self.noise_psd_dbm_hz,
            ple: PathLossExponents {
                los_lte: self.ple_los_lte,
                nlos_lte: self.ple_nlos_lte,
                los_mmw: self.ple_los_mmw,
                nlos_mmw: self.ple_nlos_mmw,
            },
            levy: LevyParams {
                beta_f: self.levy_beta_f,
                beta_r: self.levy_beta_r,
                k_short: self.levy_k_short,
                rho_short: self.levy_rho_short,
                k_long: self.levy_k_long,
                rho_long: self.levy_rho_long,
                flight_cutoff_m: self.levy_flight_cutoff_m,
            },
        }
    }

    /// Engine scenario; network and demand mix are checked here so that
    /// errors surface before any run starts.
    pub fn to_scenario(&self, timing: bool) -> Result<Scenario, ScenarioError> {
        let scenario = Scenario {
            network: self.network(),
            users: self.users,
            demand_mix: self
                .demand
                .iter()
                .map(|d| DemandClass {
                    demand: Demand::mbps(d.ul_mbps, d.dl_mbps),
                    weight: d.weight,
                })
                .collect(),
            algorithm: self.algorithm,
            slots: self.slots,
            seeds: self.seeds.clone(),
            rounding: self.rounding,
            timing,
        };
        scenario.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        scenario
            .network
            .build(self.seeds.first().copied().unwrap_or(0))
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(scenario)
    }

    /// Short hash of everything that shapes the results except the algorithm
    /// and the seed list, so runs of different algorithms and seeds compare.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.algorithm = Algorithm::Omsc;
        canonical.seeds.clear();
        let text = toml::to_string(&canonical).expect("scenario serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}

/// Splits `key=v1,v2,...`. Values that contain brackets are kept whole.
pub fn parse_sweep(arg: &str) -> Result<(String, Vec<String>), ScenarioError> {
    let (key, values) = arg
        .split_once('=')
        .ok_or_else(|| ScenarioError::SweepSyntax(arg.to_string()))?;
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in values.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    let key = key.trim();
    if key.is_empty() || out.iter().any(|v| v.trim().is_empty()) {
        return Err(ScenarioError::SweepSyntax(arg.to_string()));
    }
    Ok((key.to_string(), out.into_iter().map(|v| v.trim().to_string()).collect()))
}
