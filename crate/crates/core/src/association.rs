//! Optimal-matching user association.
//!
//! Each requesting user is matched to one free seat (a not-yet-occupied
//! subchannel slot of some BS) so that the total connection quality is
//! maximal. Quality comes from pseudo rates: LOS/NLOS-averaged Shannon rates
//! at the current and the predicted next position.

use crate::assignment::optimal_matching;
use crate::decision::SlotInput;
use crate::geometry::Vec2;
use crate::model::{BsClass, BsId, Demand, ModelError, UserId};
use crate::radio::{los_probability, mixed_inverse_loss, path_loss, Entity, Snapshot};
use std::collections::{BTreeMap, BTreeSet};

/// How the estimated interference enters the pseudo rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Interference ignored.
    Snr,
    /// Average interference of the previous slot's potential interferers.
    Sinr,
}

/// Scalar inputs of one pseudo rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoRateInputs {
    pub tx_power_w: f64,
    /// Product of both antenna directivities.
    pub gain: f64,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    /// LOS probability at the current position.
    pub p_los: f64,
    /// `1/L_LOS` at the current and the predicted position.
    pub inv_loss_los: [f64; 2],
    /// `1/L_NLOS` at the current and the predicted position.
    pub inv_loss_nlos: [f64; 2],
    pub interference_w: f64,
    /// `1 - T_align / T_s`.
    pub overhead: f64,
}

/// Expected rate over both channel states and both positions.
pub fn pseudo_rate(i: &PseudoRateInputs) -> f64 {
    let den = i.interference_w + i.noise_w;
    let half = |inv: [f64; 2]| {
        inv.iter()
            .map(|l| (1.0 + i.tx_power_w * i.gain * l / den).log2())
            .sum::<f64>()
            * i.bandwidth_hz
            / 2.0
    };
    (i.p_los * half(i.inv_loss_los) + (1.0 - i.p_los) * half(i.inv_loss_nlos)) * i.overhead
}

/// `min(sqrt(ul / R_UL), sqrt(dl / R_DL))`.
pub fn connection_quality(ul_bps: f64, dl_bps: f64, demand: &Demand) -> f64 {
    (ul_bps / demand.ul_bps).sqrt().min((dl_bps / demand.dl_bps).sqrt())
}

/// Position one slot ahead along the current velocity, kept inside the area.
pub fn predicted_position(snap: &Snapshot, user: UserId) -> Vec2 {
    let u = &snap.users[user.0];
    snap.config
        .area
        .clamp(u.position + u.velocity * snap.config.slot_duration_s())
}

/// Entities active on each band during the previous slot.
#[derive(Debug, Clone, Default)]
pub struct ActiveSet {
    /// User → serving BS.
    users: BTreeMap<UserId, BsId>,
    bss: BTreeSet<BsId>,
}

impl ActiveSet {
    pub fn from_input(input: &SlotInput) -> Self {
        let mut s = ActiveSet::default();
        if let Some(prev) = input.previous {
            for a in &prev.association {
                s.users.insert(a.user, a.bs);
                s.bss.insert(a.bs);
            }
        }
        s
    }
}

/// Average interference a `(bs, user)` link can expect in uplink and
/// downlink from the previous slot's active entities on its band that lie in
/// the receiver's main lobe.
///
/// Each interferer contributes `θ·P·G·G_rx / (360·|C_b|)` times the
/// LOS/NLOS-mixed inverse loss; omni antennas count as 360°. On the macro band
/// uplink receivers only hear users and downlink receivers only hear base
/// stations, because all macro cells switch together. The candidate's own
/// entities and the other users of its BS (which sit on other subchannels)
/// are not interferers.
pub fn potential_interference(snap: &Snapshot, active: &ActiveSet, bs: BsId, user: UserId) -> (f64, f64) {
    let cfg = snap.config;
    let b = &cfg.base_stations[bs.0];
    let band = b.class;
    let per_channel = 360.0 * b.subchannel_count as f64;
    let eb = Entity::Bs(bs);
    let eu = Entity::User(user);
    let pos_b = b.position;
    let pos_u = snap.users[user.0].position;

    let in_lobe = |rx: Entity, aim: Vec2, at: Vec2, x: Vec2| {
        let a = snap.antenna(rx, band);
        a.beam_deg >= 360.0 || (aim - at).angle_deg(x - at) < a.beam_deg / 2.0
    };
    let term = |tx: Entity, rx: Entity| {
        let a = snap.antenna(tx, band);
        let g_rx = snap.antenna(rx, band).directivity;
        a.beam_deg.min(360.0) * snap.tx_power_w(tx) * a.directivity * g_rx / per_channel
            * mixed_inverse_loss(cfg, band, snap.distance(tx, rx))
    };

    let users = active
        .users
        .iter()
        .filter(|(&u, &ub)| u != user && ub != bs && cfg.base_stations[ub.0].class == band)
        .map(|(&u, _)| Entity::User(u));
    let bss = active
        .bss
        .iter()
        .filter(|&&o| o != bs && cfg.base_stations[o.0].class == band)
        .map(|&o| Entity::Bs(o));
    let candidates: Vec<Entity> = users.chain(bss).collect();

    let mut ul = 0.0;
    let mut dl = 0.0;
    for &x in &candidates {
        let px = snap.position(x);
        let is_user = matches!(x, Entity::User(_));
        let macro_band = band == BsClass::Macro;
        if (!macro_band || is_user) && in_lobe(eb, pos_u, pos_b, px) {
            ul += term(x, eb);
        }
        if (!macro_band || !is_user) && in_lobe(eu, pos_b, pos_u, px) {
            dl += term(x, eu);
        }
    }
    (ul, dl)
}

/// Pseudo uplink and downlink rates of `(bs, user)` with the given estimated
/// interference.
pub fn pseudo_rates(snap: &Snapshot, bs: BsId, user: UserId, interference: (f64, f64)) -> (f64, f64) {
    let cfg = snap.config;
    let b = &cfg.base_stations[bs.0];
    let band = b.class;
    let now = snap.users[user.0].position.distance(b.position);
    let next = predicted_position(snap, user).distance(b.position);
    let inv = |d: f64, los: bool| 1.0 / path_loss(d, b.carrier_hz, cfg.ple.for_band(band, los));
    let gain = snap.antenna(Entity::Bs(bs), band).directivity * snap.antenna(Entity::User(user), band).directivity;
    let base = PseudoRateInputs {
        tx_power_w: 0.0,
        gain,
        bandwidth_hz: b.subchannel_bandwidth_hz,
        noise_w: snap.env.noise_w(b.subchannel_bandwidth_hz),
        p_los: los_probability(now, cfg.obstacle_density, cfg.obstacle_mean_length_m),
        inv_loss_los: [inv(now, true), inv(next, true)],
        inv_loss_nlos: [inv(now, false), inv(next, false)],
        interference_w: 0.0,
        overhead: snap.alignment_factor(bs),
    };
    let ul = pseudo_rate(&PseudoRateInputs {
        tx_power_w: snap.env.user_tx_power_w,
        interference_w: interference.0,
        ..base
    });
    let dl = pseudo_rate(&PseudoRateInputs {
        tx_power_w: snap.env.bs_tx_power_w[bs.0],
        interference_w: interference.1,
        ..base
    });
    (ul, dl)
}

/// Pseudo rates for one pair under a variant.
pub fn pair_rates(snap: &Snapshot, active: &ActiveSet, variant: Variant, bs: BsId, user: UserId) -> (f64, f64) {
    let i = match variant {
        Variant::Snr => (0.0, 0.0),
        Variant::Sinr => potential_interference(snap, active, bs, user),
    };
    pseudo_rates(snap, bs, user, i)
}

/// Matches the requesting users of `input` to free seats.
///
/// Returns the user → BS map of every associated user: ongoing users keep
/// their BS; requesting users whose best option has zero quality, or who
/// lost out on seats, stay unassociated.
pub fn associate(input: &SlotInput, variant: Variant) -> Result<BTreeMap<UserId, BsId>, ModelError> {
    let snap = &input.snap;
    let cfg = snap.config;
    let ongoing = input.ongoing();
    let load = input.ongoing_load();
    let active = ActiveSet::from_input(input);

    let mut seats: Vec<BsId> = Vec::new();
    for b in &cfg.base_stations {
        let free = b.subchannel_count.saturating_sub(load[b.id.0]);
        seats.extend(std::iter::repeat_n(b.id, free));
    }
    let rows: Vec<UserId> = input.reassoc.iter().copied().collect();

    let mut per_bs = vec![vec![0.0; cfg.base_stations.len()]; rows.len()];
    for (r, &u) in rows.iter().enumerate() {
        let demand = snap.users[u.0].demand;
        for b in &cfg.base_stations {
            let (ul, dl) = pair_rates(snap, &active, variant, b.id, u);
            per_bs[r][b.id.0] = connection_quality(ul, dl, &demand);
        }
    }
    let weights: Vec<Vec<f64>> = per_bs.iter().map(|w| seats.iter().map(|b| w[b.0]).collect()).collect();
    let m = optimal_matching(&weights)?;

    let mut out: BTreeMap<UserId, BsId> = ongoing.iter().map(|(&u, l)| (u, l.bs)).collect();
    for (r, col) in m.row_to_col.iter().enumerate() {
        if let Some(c) = *col {
            if weights[r][c] > 0.0 {
                out.insert(rows[r], seats[c]);
            }
        }
    }
    Ok(out)
}
