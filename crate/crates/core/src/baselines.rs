//! Baseline schedulers.
//!
//! * LCUAS: users with the fewest usable BSs go first and join the least
//!   loaded one.
//! * SDMAB: every user runs a UCB bandit over the BSs; a controller keeps
//!   the best association seen so far and runs whichever of the proposal and
//!   the stored scheme promises the higher total rate.
//!
//! Neither chooses switching points or subchannels. They run with all BSs
//! switching at the slot midpoint and new users taking the first idle
//! subchannel of their BS; the `-SC` variants hand subchannels to the
//! spectral allocator instead.

use crate::association::{connection_quality, pseudo_rates};
use crate::decision::{Decision, ScheduleError, SlotInput};
use crate::engine::Scheduler;
use crate::model::{BsId, NetworkConfig, SlotMetrics, UserId};
use crate::radio::{perceived_rates, ExpectedChannel, GainContext};
use crate::scsa::{self, SpectralReport};
use crate::tdd::midpoint_switch_points;
use std::collections::{BTreeMap, BTreeSet};

/// How a baseline picks subchannels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelScheme {
    FirstIdle,
    Spectral,
}

/// Lowest free subchannel of each new user's BS, in user id order. Users in
/// `locked` keep their subchannel.
pub fn first_idle_subchannels(
    config: &NetworkConfig,
    assoc: &BTreeMap<UserId, BsId>,
    locked: &BTreeMap<UserId, usize>,
) -> Result<BTreeMap<UserId, usize>, ScheduleError> {
    let mut busy: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); config.base_stations.len()];
    let mut out = BTreeMap::new();
    for (u, &ch) in locked {
        if let Some(b) = assoc.get(u) {
            busy[b.0].insert(ch);
            out.insert(*u, ch);
        }
    }
    for (&u, &b) in assoc {
        if out.contains_key(&u) {
            continue;
        }
        let n = config.base_stations[b.0].subchannel_count;
        let ch = (0..n)
            .find(|c| !busy[b.0].contains(c))
            .ok_or(ScheduleError::NoIdleSubchannel(b))?;
        busy[b.0].insert(ch);
        out.insert(u, ch);
    }
    Ok(out)
}

fn locked_channels(input: &SlotInput) -> BTreeMap<UserId, usize> {
    input.ongoing().into_iter().map(|(u, l)| (u, l.subchannel)).collect()
}

/// Completes an association with midpoint switching and the chosen channel
/// scheme.
fn complete(
    input: &SlotInput,
    assoc: &BTreeMap<UserId, BsId>,
    scheme: ChannelScheme,
    reports: &mut Vec<SpectralReport>,
) -> Result<Decision, ScheduleError> {
    let cfg = input.snap.config;
    let points = midpoint_switch_points(cfg);
    let locked = locked_channels(input);
    let channels = match scheme {
        ChannelScheme::FirstIdle => first_idle_subchannels(cfg, assoc, &locked)?,
        ChannelScheme::Spectral => {
            let a = scsa::allocate(&input.snap, assoc, &locked, &points, input.seed, input.slot)?;
            *reports = a.reports;
            a.channels
        }
    };
    Ok(Decision::from_parts(input.slot, assoc, &channels, points))
}

/// A BS is usable by a user when its SNR-based connection quality reaches 1
/// (both pseudo rates meet the demand).
fn usable(input: &SlotInput, user: UserId, bs: BsId) -> bool {
    let (ul, dl) = pseudo_rates(&input.snap, bs, user, (0.0, 0.0));
    connection_quality(ul, dl, &input.snap.users[user.0].demand) >= 1.0
}

/// Least-loaded association of the requesting users.
pub fn lcuas_associate(input: &SlotInput) -> BTreeMap<UserId, BsId> {
    let cfg = input.snap.config;
    let mut load = input.ongoing_load();
    let mut out: BTreeMap<UserId, BsId> = input.ongoing().iter().map(|(&u, l)| (u, l.bs)).collect();
    let has_seat = |load: &[usize], b: BsId| load[b.0] < cfg.base_stations[b.0].subchannel_count;

    let mut options: Vec<(UserId, Vec<BsId>)> = input
        .reassoc
        .iter()
        .map(|&u| {
            let bs: Vec<BsId> = cfg
                .base_stations
                .iter()
                .map(|b| b.id)
                .filter(|&b| has_seat(&load, b) && usable(input, u, b))
                .collect();
            (u, bs)
        })
        .collect();
    options.sort_by_key(|(u, bs)| (bs.len(), *u));

    for (u, bs) in options {
        let pick = bs
            .iter()
            .copied()
            .filter(|&b| has_seat(&load, b))
            .min_by_key(|&b| (load[b.0], b));
        if let Some(b) = pick {
            load[b.0] += 1;
            out.insert(u, b);
        }
    }
    out
}

/// Per-user UCB bandits plus the controller's best scheme so far.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditState {
    /// `pulls[u][b]`.
    pub pulls: Vec<Vec<u64>>,
    /// `means[u][b]`, running mean of normalized rewards.
    pub means: Vec<Vec<f64>>,
    pub exploration: f64,
    pub best: Option<(BTreeMap<UserId, BsId>, f64)>,
}

impl BanditState {
    pub fn new(n_users: usize, n_bs: usize) -> Self {
        Self {
            pulls: vec![vec![0; n_bs]; n_users],
            means: vec![vec![0.0; n_bs]; n_users],
            exploration: std::f64::consts::SQRT_2,
            best: None,
        }
    }

    /// Arm a user would pull among `allowed`: an unpulled arm if any (lowest
    /// id), otherwise the highest upper confidence bound.
    pub fn choose(&self, user: UserId, allowed: &[BsId]) -> Option<BsId> {
        let pulls = &self.pulls[user.0];
        if let Some(&b) = allowed.iter().find(|b| pulls[b.0] == 0) {
            return Some(b);
        }
        let t: u64 = pulls.iter().sum();
        let ln_t = (t.max(1) as f64).ln();
        let mut best: Option<(f64, BsId)> = None;
        for &b in allowed {
            let n = pulls[b.0] as f64;
            let score = self.means[user.0][b.0] + self.exploration * (ln_t / n).sqrt();
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, b));
            }
        }
        best.map(|(_, b)| b)
    }

    /// Incremental mean update of one arm.
    pub fn reward(&mut self, user: UserId, bs: BsId, reward: f64) {
        let n = &mut self.pulls[user.0][bs.0];
        *n += 1;
        let m = &mut self.means[user.0][bs.0];
        *m += (reward - *m) / *n as f64;
    }
}

/// Expected total rate of a full association under midpoint switching and
/// first-idle subchannels, averaged over LOS/NLOS.
pub fn expected_overall_rate(input: &SlotInput, assoc: &BTreeMap<UserId, BsId>) -> Result<f64, ScheduleError> {
    let d = complete(input, assoc, ChannelScheme::FirstIdle, &mut Vec::new())?;
    let gains = GainContext::new(&d, input.snap.users.len());
    let ch = ExpectedChannel { snap: input.snap };
    Ok(perceived_rates(&input.snap, &d, &gains, &ch)
        .iter()
        .map(|(_, ul, dl)| ul + dl)
        .sum())
}

/// Bandit association: builds the users' proposal, compares it with the
/// stored best scheme and returns the winner (proposal on ties). The stored
/// best is updated to the winner.
pub fn sdmab_associate(input: &SlotInput, bandit: &mut BanditState) -> Result<BTreeMap<UserId, BsId>, ScheduleError> {
    let cfg = input.snap.config;
    let ongoing: BTreeMap<UserId, BsId> = input.ongoing().iter().map(|(&u, l)| (u, l.bs)).collect();
    let base_load = input.ongoing_load();
    let seat_left = |load: &[usize], b: BsId| load[b.0] < cfg.base_stations[b.0].subchannel_count;

    let mut proposal = ongoing.clone();
    let mut load = base_load.clone();
    for &u in input.reassoc {
        let allowed: Vec<BsId> = cfg
            .base_stations
            .iter()
            .map(|b| b.id)
            .filter(|&b| seat_left(&load, b) && usable(input, u, b))
            .collect();
        if let Some(b) = bandit.choose(u, &allowed) {
            load[b.0] += 1;
            proposal.insert(u, b);
        }
    }
    let proposal_value = expected_overall_rate(input, &proposal)?;

    let (winner, value) = match &bandit.best {
        None => (proposal, proposal_value),
        Some((stored, _)) => {
            let mut historical = ongoing;
            let mut load = base_load;
            for &u in input.reassoc {
                if let Some(&b) = stored.get(&u) {
                    if seat_left(&load, b) && usable(input, u, b) {
                        load[b.0] += 1;
                        historical.insert(u, b);
                    }
                }
            }
            let hist_value = expected_overall_rate(input, &historical)?;
            if proposal_value >= hist_value {
                (proposal, proposal_value)
            } else {
                (historical, hist_value)
            }
        }
    };
    bandit.best = Some((winner.clone(), value));
    Ok(winner)
}

/// Least-loaded association with baseline switching and channels.
pub struct Lcuas {
    scheme: ChannelScheme,
    reports: Vec<SpectralReport>,
}

impl Lcuas {
    pub fn new(scheme: ChannelScheme) -> Self {
        Self {
            scheme,
            reports: Vec::new(),
        }
    }
}

impl Scheduler for Lcuas {
    fn decide(&mut self, input: &SlotInput) -> Result<Decision, ScheduleError> {
        let assoc = lcuas_associate(input);
        complete(input, &assoc, self.scheme, &mut self.reports)
    }

    fn spectral_reports(&self) -> &[SpectralReport] {
        &self.reports
    }
}

/// Bandit association with baseline switching and channels.
pub struct Sdmab {
    scheme: ChannelScheme,
    pub bandit: BanditState,
    reports: Vec<SpectralReport>,
}

impl Sdmab {
    pub fn new(scheme: ChannelScheme, n_users: usize, n_bs: usize) -> Self {
        Self {
            scheme,
            bandit: BanditState::new(n_users, n_bs),
            reports: Vec::new(),
        }
    }
}

impl Scheduler for Sdmab {
    fn decide(&mut self, input: &SlotInput) -> Result<Decision, ScheduleError> {
        let assoc = sdmab_associate(input, &mut self.bandit)?;
        complete(input, &assoc, self.scheme, &mut self.reports)
    }

    /// Rewards every served user's arm with its realized rate over its total
    /// demand, clipped to `[0, 1]`.
    fn observe(&mut self, decision: &Decision, metrics: &SlotMetrics, input: &SlotInput) {
        for rec in &metrics.users {
            let Some(link) = decision.link_of(rec.user) else {
                continue;
            };
            let demand = input.snap.users[rec.user.0].demand.total_bps();
            let r = ((rec.ul_bps + rec.dl_bps) / demand).clamp(0.0, 1.0);
            self.bandit.reward(rec.user, link.bs, r);
        }
    }

    fn spectral_reports(&self) -> &[SpectralReport] {
        &self.reports
    }
}
