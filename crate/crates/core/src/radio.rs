//! Channel model: two-state path loss, beam gains, subslot interference and
//! the perceived per-slot rates of every active link.

use crate::decision::Decision;
use crate::geometry::Vec2;
use crate::model::{Antenna, BsClass, BsId, Link, ModelError, NetworkConfig, RadioEnv, UserId, UserState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::f64::consts::PI;

pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Distances below this are clamped before computing path loss.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// `(4π d f / c)^n` with `d` clamped to at least one meter.
pub fn path_loss(d_m: f64, f_hz: f64, exponent: f64) -> f64 {
    (4.0 * PI * d_m.max(MIN_DISTANCE_M) * f_hz / SPEED_OF_LIGHT).powf(exponent)
}

/// Probability that a path of length `d_m` is unobstructed.
pub fn los_probability(d_m: f64, obstacle_density: f64, obstacle_mean_length_m: f64) -> f64 {
    (-2.0 * obstacle_density * obstacle_mean_length_m * d_m.max(0.0) / PI).exp()
}

/// Exhaustive beam-search time between a BS and a user, in microseconds.
/// Macro links need no alignment.
pub fn beam_alignment_time_us(
    class: BsClass,
    bs_antenna: &Antenna,
    user_antenna: &Antenna,
    pilot_time_us: f64,
) -> Result<f64, ModelError> {
    if class == BsClass::Macro {
        return Ok(0.0);
    }
    for (name, a) in [("bs beam width", bs_antenna), ("user beam width", user_antenna)] {
        if !(a.beam_deg > 0.0) {
            return Err(ModelError::Domain {
                name,
                value: a.beam_deg,
                domain: "(0, 360]",
            });
        }
    }
    let sweeps =
        (bs_antenna.sector_deg / bs_antenna.beam_deg).ceil() * (user_antenna.sector_deg / user_antenna.beam_deg).ceil();
    Ok(sweeps * pilot_time_us)
}

/// Fraction of the slot left for data after beam alignment, floored at 0.
pub fn overhead_factor(alignment_us: f64, slot_us: f64) -> f64 {
    (1.0 - alignment_us / slot_us).max(0.0)
}

pub fn sinr(received_w: f64, interference_w: f64, noise_w: f64) -> f64 {
    received_w / (interference_w + noise_w)
}

pub fn shannon_rate(sinr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * sinr.log2_1p()
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

/// Gain of `antenna` at `at`, aimed at `aim`, towards `target`: full
/// directivity inside the main lobe, nothing outside. Omni antennas (360°)
/// always radiate.
pub fn beam_gain(antenna: &Antenna, at: Vec2, aim: Vec2, target: Vec2) -> f64 {
    if antenna.beam_deg >= 360.0 {
        return antenna.directivity;
    }
    if (aim - at).angle_deg(target - at) < antenna.beam_deg / 2.0 {
        antenna.directivity
    } else {
        0.0
    }
}

/// `P_LOS / L_LOS + P_NLOS / L_NLOS` for a path of length `d_m` in `band`.
pub fn mixed_inverse_loss(config: &NetworkConfig, band: BsClass, d_m: f64) -> f64 {
    let f = carrier_hz(config, band);
    let p = los_probability(d_m, config.obstacle_density, config.obstacle_mean_length_m);
    p / path_loss(d_m, f, config.ple.for_band(band, true))
        + (1.0 - p) / path_loss(d_m, f, config.ple.for_band(band, false))
}

fn carrier_hz(config: &NetworkConfig, band: BsClass) -> f64 {
    config
        .base_stations
        .iter()
        .find(|b| b.class == band)
        .map_or(0.0, |b| b.carrier_hz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Bs(BsId),
    User(UserId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Uplink,
    Downlink,
}

/// Positions and powers of everything on air at slot start.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub config: &'a NetworkConfig,
    pub env: &'a RadioEnv,
    pub users: &'a [UserState],
}

impl<'a> Snapshot<'a> {
    pub fn position(&self, e: Entity) -> Vec2 {
        match e {
            Entity::Bs(b) => self.config.base_stations[b.0].position,
            Entity::User(u) => self.users[u.0].position,
        }
    }

    pub fn tx_power_w(&self, e: Entity) -> f64 {
        match e {
            Entity::Bs(b) => self.env.bs_tx_power_w[b.0],
            Entity::User(_) => self.env.user_tx_power_w,
        }
    }

    /// Antenna an entity uses in `band`; users switch to an omni antenna on
    /// the macro band.
    pub fn antenna(&self, e: Entity, band: BsClass) -> Antenna {
        match (e, band) {
            (Entity::Bs(b), _) => self.config.base_stations[b.0].antenna,
            (Entity::User(_), BsClass::Pico) => self.config.user_antenna,
            (Entity::User(_), BsClass::Macro) => Antenna::OMNI,
        }
    }

    pub fn distance(&self, a: Entity, b: Entity) -> f64 {
        self.position(a).distance(self.position(b))
    }

    /// Index used to key per-pair random draws.
    fn entity_index(&self, e: Entity) -> u64 {
        match e {
            Entity::Bs(b) => b.0 as u64,
            Entity::User(u) => (self.config.base_stations.len() + u.0) as u64,
        }
    }

    pub fn alignment_factor(&self, bs: BsId) -> f64 {
        let b = &self.config.base_stations[bs.0];
        let t = beam_alignment_time_us(
            b.class,
            &b.antenna,
            &self.config.user_antenna,
            self.config.pilot_time_us,
        )
        .unwrap_or(f64::INFINITY);
        overhead_factor(t, self.config.slot_duration_us)
    }
}

/// One realized path between two entities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub a: Entity,
    pub b: Entity,
    pub los: bool,
    pub path_loss_linear: f64,
    pub distance_m: f64,
}

/// Source of `1/L` between two entities in a band.
pub trait Propagation {
    fn inverse_loss(&self, a: Entity, b: Entity, band: BsClass) -> f64;
}

/// LOS state drawn once per unordered pair per slot.
///
/// The draw is a pure function of `(seed, slot, pair)`, so both directions of
/// a pair, and any evaluation order, see the same channel.
pub struct RealizedChannel<'a> {
    snap: Snapshot<'a>,
    key: [u8; 32],
}

impl<'a> RealizedChannel<'a> {
    pub fn new(snap: Snapshot<'a>, seed: u64, slot: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&slot.to_le_bytes());
        key[16..24].copy_from_slice(b"los-draw");
        Self { snap, key }
    }

    pub fn sample(&self, a: Entity, b: Entity, band: BsClass) -> LinkSample {
        let cfg = self.snap.config;
        let (ia, ib) = (self.snap.entity_index(a), self.snap.entity_index(b));
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream((ia.min(ib) << 32) | ia.max(ib));
        let d = self.snap.distance(a, b);
        let los = rng.random::<f64>() < los_probability(d, cfg.obstacle_density, cfg.obstacle_mean_length_m);
        LinkSample {
            a,
            b,
            los,
            path_loss_linear: path_loss(d, carrier_hz(cfg, band), cfg.ple.for_band(band, los)),
            distance_m: d,
        }
    }
}

impl Propagation for RealizedChannel<'_> {
    fn inverse_loss(&self, a: Entity, b: Entity, band: BsClass) -> f64 {
        1.0 / self.sample(a, b, band).path_loss_linear
    }
}

/// LOS/NLOS-averaged channel: what a scheduler with statistical channel
/// knowledge expects to see.
pub struct ExpectedChannel<'a> {
    pub snap: Snapshot<'a>,
}

impl Propagation for ExpectedChannel<'_> {
    fn inverse_loss(&self, a: Entity, b: Entity, band: BsClass) -> f64 {
        mixed_inverse_loss(self.snap.config, band, self.snap.distance(a, b))
    }
}

/// Boresights of every active link in a slot.
#[derive(Debug, Clone)]
pub struct GainContext {
    /// `(bs, channel)` → the user that beam is aimed at.
    bs_beams: HashMap<(BsId, usize), UserId>,
    user_links: Vec<Option<Link>>,
}

impl GainContext {
    pub fn new(decision: &Decision, n_users: usize) -> Self {
        let mut user_links = vec![None; n_users];
        let mut bs_beams = HashMap::new();
        for a in &decision.association {
            user_links[a.user.0] = Some(a.link());
            bs_beams.insert((a.bs, a.subchannel), a.user);
        }
        Self { bs_beams, user_links }
    }

    pub fn link_of(&self, u: UserId) -> Option<Link> {
        self.user_links.get(u.0).copied().flatten()
    }

    fn band_of(&self, snap: &Snapshot, e: Entity) -> Option<BsClass> {
        match e {
            Entity::Bs(b) => Some(snap.config.base_stations[b.0].class),
            Entity::User(u) => self.link_of(u).map(|l| snap.config.base_stations[l.bs.0].class),
        }
    }

    /// Where `e` points its beam on `channel`, if it is active there.
    fn aim(&self, snap: &Snapshot, e: Entity, channel: usize) -> Option<Vec2> {
        match e {
            Entity::Bs(b) => self
                .bs_beams
                .get(&(b, channel))
                .map(|&u| snap.position(Entity::User(u))),
            Entity::User(u) => self
                .link_of(u)
                .filter(|l| l.subchannel == channel)
                .map(|l| snap.position(Entity::Bs(l.bs))),
        }
    }

    /// Gain contributed by `tx` towards `rx` on `channel`: 1 on the macro
    /// band, the directivity of `tx` when `rx` sits in the main lobe of its
    /// active beam on the mmWave band, 0 otherwise (including band mismatch).
    pub fn gain(&self, snap: &Snapshot, tx: Entity, rx: Entity, channel: usize) -> f64 {
        let (Some(bt), Some(br)) = (self.band_of(snap, tx), self.band_of(snap, rx)) else {
            return 0.0;
        };
        if bt != br {
            return 0.0;
        }
        match bt {
            BsClass::Macro => 1.0,
            BsClass::Pico => match self.aim(snap, tx, channel) {
                Some(aim) => beam_gain(&snap.antenna(tx, bt), snap.position(tx), aim, snap.position(rx)),
                None => 0.0,
            },
        }
    }

    pub fn link_gain(&self, snap: &Snapshot, a: Entity, b: Entity, channel: usize) -> f64 {
        self.gain(snap, a, b, channel) * self.gain(snap, b, a, channel)
    }
}

/// Interference at the receiver of `(bs, user)` in subslot `tau` (1-based)
/// while it runs in `direction`. Every other co-channel link in the band
/// contributes its user if that link's BS is still in uplink at `tau`, and
/// its BS otherwise.
#[allow(clippy::too_many_arguments)]
pub fn subslot_interference(
    snap: &Snapshot,
    decision: &Decision,
    gains: &GainContext,
    channel: &dyn Propagation,
    bs: BsId,
    user: UserId,
    direction: Direction,
    tau: usize,
) -> f64 {
    let Some(link) = gains.link_of(user) else {
        return 0.0;
    };
    let band = snap.config.base_stations[bs.0].class;
    let rx = match direction {
        Direction::Uplink => Entity::Bs(bs),
        Direction::Downlink => Entity::User(user),
    };
    decision
        .association
        .iter()
        .filter(|o| o.bs != bs && o.user != user && o.subchannel == link.subchannel)
        .filter(|o| snap.config.base_stations[o.bs.0].class == band)
        .map(|o| {
            let tx = if tau <= decision.switch_points[o.bs.0] {
                Entity::User(o.user)
            } else {
                Entity::Bs(o.bs)
            };
            let g = gains.link_gain(snap, tx, rx, link.subchannel);
            if g == 0.0 {
                0.0
            } else {
                snap.tx_power_w(tx) * g * channel.inverse_loss(tx, rx, band)
            }
        })
        .sum()
}

/// Perceived uplink and downlink rate of every associated user.
pub fn perceived_rates(
    snap: &Snapshot,
    decision: &Decision,
    gains: &GainContext,
    channel: &dyn Propagation,
) -> Vec<(UserId, f64, f64)> {
    let n_s = snap.config.n_subslots;
    decision
        .association
        .iter()
        .map(|a| {
            let b = &snap.config.base_stations[a.bs.0];
            let (eb, eu) = (Entity::Bs(a.bs), Entity::User(a.user));
            let g = gains.link_gain(snap, eb, eu, a.subchannel);
            let inv_l = channel.inverse_loss(eb, eu, b.class);
            let noise = snap.env.noise_w(b.subchannel_bandwidth_hz);
            let split = decision.switch_points[a.bs.0];
            let (mut ul, mut dl) = (0.0, 0.0);
            for tau in 1..=n_s {
                let (dir, tx) = if tau <= split {
                    (Direction::Uplink, eu)
                } else {
                    (Direction::Downlink, eb)
                };
                let signal = snap.tx_power_w(tx) * g * inv_l;
                let i = subslot_interference(snap, decision, gains, channel, a.bs, a.user, dir, tau);
                let r = shannon_rate(sinr(signal, i, noise), b.subchannel_bandwidth_hz);
                match dir {
                    Direction::Uplink => ul += r,
                    Direction::Downlink => dl += r,
                }
            }
            let f = snap.alignment_factor(a.bs) / n_s as f64;
            (a.user, f * ul, f * dl)
        })
        .collect()
}
