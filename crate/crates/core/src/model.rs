//! Domain types shared by the channel model, the schedulers and the engine.

use crate::geometry::{Rect, Vec2};
use crate::mobility::{LevyParams, MobilityPhase};
use crate::units::{db_to_linear, dbm_to_watts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown base station id {0}")]
    UnknownBs(usize),
    #[error("unknown user id {0}")]
    UnknownUser(usize),
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BsId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub usize);

impl fmt::Display for BsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bs{}", self.0)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ue{}", self.0)
    }
}

/// Base station class. Doubles as the band tag: macro cells own the sub-6 GHz
/// band and pico cells own the mmWave band, and the two never interfere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BsClass {
    Macro,
    Pico,
}

/// Directional antenna description. An omnidirectional antenna is
/// `Antenna::OMNI`: unit gain, 360° beam, 360° search sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Antenna {
    /// Linear directivity (not dBi).
    pub directivity: f64,
    pub beam_deg: f64,
    pub sector_deg: f64,
}

impl Antenna {
    pub const OMNI: Antenna = Antenna {
        directivity: 1.0,
        beam_deg: 360.0,
        sector_deg: 360.0,
    };

    pub fn directional(directivity_dbi: f64, beam_deg: f64, sector_deg: f64) -> Self {
        Self {
            directivity: db_to_linear(directivity_dbi),
            beam_deg,
            sector_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: BsId,
    pub class: BsClass,
    pub position: Vec2,
    pub carrier_hz: f64,
    pub subchannel_count: usize,
    pub subchannel_bandwidth_hz: f64,
    pub tx_power_dbm_per_subchannel: f64,
    pub antenna: Antenna,
}

/// Path-loss exponents for LOS/NLOS in both bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossExponents {
    pub los_lte: f64,
    pub nlos_lte: f64,
    pub los_mmw: f64,
    pub nlos_mmw: f64,
}

impl PathLossExponents {
    pub fn for_band(&self, band: BsClass, los: bool) -> f64 {
        match (band, los) {
            (BsClass::Macro, true) => self.los_lte,
            (BsClass::Macro, false) => self.nlos_lte,
            (BsClass::Pico, true) => self.los_mmw,
            (BsClass::Pico, false) => self.nlos_mmw,
        }
    }
}

impl Default for PathLossExponents {
    fn default() -> Self {
        Self {
            los_lte: 2.0,
            nlos_lte: 3.37,
            los_mmw: 2.55,
            nlos_mmw: 5.76,
        }
    }
}

/// Immutable scenario description for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub area: Rect,
    pub base_stations: Vec<BaseStation>,
    pub n_subslots: usize,
    pub slot_duration_us: f64,
    pub pilot_time_us: f64,
    /// Obstacles per square meter.
    pub obstacle_density: f64,
    pub obstacle_mean_length_m: f64,
    pub noise_psd_dbm_hz: f64,
    pub ple: PathLossExponents,
    pub levy: LevyParams,
    pub user_tx_power_dbm: f64,
    /// mmWave antenna of every user; sub-6 GHz links use an implicit omni antenna.
    pub user_antenna: Antenna,
    pub rng_seed: u64,
}

impl NetworkConfig {
    pub fn bs(&self, id: BsId) -> Result<&BaseStation, ModelError> {
        self.base_stations.get(id.0).ok_or(ModelError::UnknownBs(id.0))
    }

    pub fn macros(&self) -> impl Iterator<Item = &BaseStation> {
        self.base_stations.iter().filter(|b| b.class == BsClass::Macro)
    }

    pub fn picos(&self) -> impl Iterator<Item = &BaseStation> {
        self.base_stations.iter().filter(|b| b.class == BsClass::Pico)
    }

    /// Number of subchannels shared by every BS of a band (0 if the band is empty).
    pub fn band_subchannels(&self, band: BsClass) -> usize {
        self.base_stations
            .iter()
            .find(|b| b.class == band)
            .map_or(0, |b| b.subchannel_count)
    }

    pub fn slot_duration_s(&self) -> f64 {
        self.slot_duration_us * 1e-6
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.n_subslots < 2 {
            return bad(format!("n_subslots must be >= 2, got {}", self.n_subslots));
        }
        if self.area.is_degenerate() {
            return bad("area is degenerate".into());
        }
        let p = self.ple;
        if ![p.los_lte, p.nlos_lte, p.los_mmw, p.nlos_mmw]
            .iter()
            .all(|e| e.is_finite() && *e > 0.0)
        {
            return bad("path-loss exponents must be positive".into());
        }
        if !(self.slot_duration_us > 0.0) || !(self.pilot_time_us >= 0.0) {
            return bad("slot and pilot durations must be positive".into());
        }
        if !(self.obstacle_density >= 0.0) || !(self.obstacle_mean_length_m >= 0.0) {
            return bad("obstacle parameters must be nonnegative".into());
        }
        self.levy.validate()?;
        let ua = self.user_antenna;
        if !(ua.beam_deg > 0.0 && ua.beam_deg <= 360.0 && ua.sector_deg > 0.0) {
            return bad("user antenna beam/sector widths must be positive".into());
        }
        for class in [BsClass::Macro, BsClass::Pico] {
            let mut members = self.base_stations.iter().filter(|b| b.class == class);
            let Some(first) = members.next() else { continue };
            for b in members {
                if b.carrier_hz != first.carrier_hz
                    || b.subchannel_bandwidth_hz != first.subchannel_bandwidth_hz
                    || b.subchannel_count != first.subchannel_count
                {
                    return bad(format!(
                        "{} does not share the {:?} band plan of {}",
                        b.id, class, first.id
                    ));
                }
            }
        }
        for (i, b) in self.base_stations.iter().enumerate() {
            if b.id.0 != i {
                return bad(format!("base station at index {i} has id {}", b.id));
            }
            if b.subchannel_count == 0 {
                return bad(format!("{} has no subchannels", b.id));
            }
            if !(b.carrier_hz > 0.0 && b.subchannel_bandwidth_hz > 0.0) {
                return bad(format!("{} has a non-positive carrier or bandwidth", b.id));
            }
            if !self.area.contains(b.position) {
                return bad(format!("{} lies outside the area", b.id));
            }
            match b.class {
                BsClass::Macro if b.antenna != Antenna::OMNI => {
                    return bad(format!("macro {} must be omnidirectional", b.id));
                }
                BsClass::Pico if !(b.antenna.beam_deg > 0.0 && b.antenna.beam_deg < 360.0) => {
                    return bad(format!("pico {} beam must lie in (0, 360)", b.id));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Scalar network parameters from which a [`NetworkConfig`] is generated.
/// Defaults are the reference parameter set at desk scale (2 macro cells,
/// 12 pico cells, 15 dBi / 30° pico beams).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub area: Rect,
    pub mbs_positions: Vec<Vec2>,
    pub pbs_count: usize,
    /// Explicit pico positions; when empty, picos are dropped uniformly in the area.
    pub pbs_positions: Vec<Vec2>,
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
    pub ple: PathLossExponents,
    pub levy: LevyParams,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            area: Rect::new(Vec2::new(-1000.0, -500.0), Vec2::new(1000.0, 500.0)),
            mbs_positions: vec![Vec2::new(-500.0, 0.0), Vec2::new(500.0, 0.0)],
            pbs_count: 12,
            pbs_positions: Vec::new(),
            macro_carrier_hz: 1.9e9,
            pico_carrier_hz: 28e9,
            macro_subchannel_count: 18,
            pico_subchannel_count: 3,
            macro_subchannel_bandwidth_hz: 1.8e6,
            pico_subchannel_bandwidth_hz: 14.4e6,
            macro_tx_power_dbm: 43.0,
            pico_tx_power_dbm: 33.0,
            user_tx_power_dbm: 30.0,
            pico_directivity_dbi: 15.0,
            pico_beam_deg: 30.0,
            pico_sector_deg: 90.0,
            user_directivity_dbi: 15.0,
            user_beam_deg: 30.0,
            user_sector_deg: 90.0,
            n_subslots: 8,
            slot_duration_us: 65535.0,
            pilot_time_us: 20.0,
            obstacle_density: 4.4e-4,
            obstacle_mean_length_m: 55.0,
            noise_psd_dbm_hz: -174.0,
            ple: PathLossExponents::default(),
            levy: LevyParams::default(),
        }
    }
}

impl NetworkParams {
    /// Builds the BS roster. Macro cells come first (ids `0..mbs`), then pico
    /// cells, either at their explicit positions or dropped uniformly using
    /// `seed`.
    pub fn build(&self, seed: u64) -> Result<NetworkConfig, ModelError> {
        if !self.pbs_positions.is_empty() && self.pbs_positions.len() != self.pbs_count {
            return Err(ModelError::InvalidConfig(format!(
                "pbs_count = {} but {} pico positions were given",
                self.pbs_count,
                self.pbs_positions.len()
            )));
        }
        let mut stations = Vec::with_capacity(self.mbs_positions.len() + self.pbs_count);
        for &position in &self.mbs_positions {
            stations.push(BaseStation {
                id: BsId(stations.len()),
                class: BsClass::Macro,
                position,
                carrier_hz: self.macro_carrier_hz,
                subchannel_count: self.macro_subchannel_count,
                subchannel_bandwidth_hz: self.macro_subchannel_bandwidth_hz,
                tx_power_dbm_per_subchannel: self.macro_tx_power_dbm,
                antenna: Antenna::OMNI,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_PLACEMENT);
        for i in 0..self.pbs_count {
            let position = match self.pbs_positions.get(i) {
                Some(&p) => p,
                None => Vec2::new(
                    rng.random_range(self.area.min.x..=self.area.max.x),
                    rng.random_range(self.area.min.y..=self.area.max.y),
                ),
            };
            stations.push(BaseStation {
                id: BsId(stations.len()),
                class: BsClass::Pico,
                position,
                carrier_hz: self.pico_carrier_hz,
                subchannel_count: self.pico_subchannel_count,
                subchannel_bandwidth_hz: self.pico_subchannel_bandwidth_hz,
                tx_power_dbm_per_subchannel: self.pico_tx_power_dbm,
                antenna: Antenna::directional(self.pico_directivity_dbi, self.pico_beam_deg, self.pico_sector_deg),
            });
        }
        let config = NetworkConfig {
            area: self.area,
            base_stations: stations,
            n_subslots: self.n_subslots,
            slot_duration_us: self.slot_duration_us,
            pilot_time_us: self.pilot_time_us,
            obstacle_density: self.obstacle_density,
            obstacle_mean_length_m: self.obstacle_mean_length_m,
            noise_psd_dbm_hz: self.noise_psd_dbm_hz,
            ple: self.ple,
            levy: self.levy,
            user_tx_power_dbm: self.user_tx_power_dbm,
            user_antenna: Antenna::directional(self.user_directivity_dbi, self.user_beam_deg, self.user_sector_deg),
            rng_seed: seed,
        };
        config.validate()?;
        Ok(config)
    }
}

/// ChaCha stream ids, so every consumer of a run seed draws from its own sequence.
pub(crate) const STREAM_PLACEMENT: u64 = 1;
pub(crate) const STREAM_POPULATION: u64 = 2;
pub(crate) const STREAM_MOBILITY: u64 = 3;

/// Linear-domain view of the powers in a [`NetworkConfig`], converted once per run.
#[derive(Debug, Clone)]
pub struct RadioEnv {
    pub bs_tx_power_w: Vec<f64>,
    pub user_tx_power_w: f64,
    pub noise_psd_w_hz: f64,
}

impl RadioEnv {
    pub fn new(config: &NetworkConfig) -> Self {
        Self {
            bs_tx_power_w: config
                .base_stations
                .iter()
                .map(|b| dbm_to_watts(b.tx_power_dbm_per_subchannel))
                .collect(),
            user_tx_power_w: dbm_to_watts(config.user_tx_power_dbm),
            noise_psd_w_hz: dbm_to_watts(config.noise_psd_dbm_hz),
        }
    }

    pub fn noise_w(&self, bandwidth_hz: f64) -> f64 {
        bandwidth_hz * self.noise_psd_w_hz
    }
}

/// Minimum uplink and downlink rates, in bit/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub ul_bps: f64,
    pub dl_bps: f64,
}

impl Demand {
    pub fn mbps(ul: f64, dl: f64) -> Self {
        Self {
            ul_bps: ul * 1e6,
            dl_bps: dl * 1e6,
        }
    }

    pub fn total_bps(&self) -> f64 {
        self.ul_bps + self.dl_bps
    }
}

/// A served connection: the BS and the subchannel index within its plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub bs: BsId,
    pub subchannel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Association {
    None,
    Ongoing {
        bs: BsId,
        subchannel: usize,
        since_slot: u64,
    },
}

impl Association {
    pub fn link(&self) -> Option<Link> {
        match *self {
            Association::None => None,
            Association::Ongoing { bs, subchannel, .. } => Some(Link { bs, subchannel }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub id: UserId,
    pub position: Vec2,
    pub velocity: Vec2,
    pub phase: MobilityPhase,
    pub demand: Demand,
    pub assoc: Association,
    pub satisfied_last_slot: bool,
}

impl UserState {
    /// Whether the user asks for (re)association this slot: it is unserved, or
    /// its previous slot missed a demand.
    pub fn requests_association(&self) -> bool {
        self.assoc == Association::None || !self.satisfied_last_slot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user: UserId,
    pub link: Option<Link>,
    pub ul_bps: f64,
    pub dl_bps: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub slot: u64,
    pub overall_rate_bps: f64,
    pub effective_rate_bps: f64,
    pub satisfied_count: usize,
    pub decision_time_us: f64,
    pub users: Vec<UserRecord>,
}
