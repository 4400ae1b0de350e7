//! Scheduler output for one slot and the structural constraint checker.

use crate::model::{BsClass, BsId, Link, ModelError, NetworkConfig, UserId};
use crate::radio::Snapshot;
use crate::scsa::ScsaError;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Everything a scheduler may look at when deciding slot `slot`.
///
/// Channel knowledge is statistical only: positions, velocities, demands and
/// the previous decision, never the LOS draws of the current slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotInput<'a> {
    pub snap: Snapshot<'a>,
    pub slot: u64,
    /// Run seed, for schedulers that randomize.
    pub seed: u64,
    /// Users asking for (re)association this slot.
    pub reassoc: &'a BTreeSet<UserId>,
    pub previous: Option<&'a Decision>,
}

impl SlotInput<'_> {
    /// Links that must be carried over unchanged.
    pub fn ongoing(&self) -> BTreeMap<UserId, Link> {
        self.snap
            .users
            .iter()
            .filter(|u| !self.reassoc.contains(&u.id))
            .filter_map(|u| u.assoc.link().map(|l| (u.id, l)))
            .collect()
    }

    /// Ongoing user count per BS.
    pub fn ongoing_load(&self) -> Vec<usize> {
        let mut load = vec![0; self.snap.config.base_stations.len()];
        for l in self.ongoing().values() {
            load[l.bs.0] += 1;
        }
        load
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment {
    pub user: UserId,
    pub bs: BsId,
    pub subchannel: usize,
}

impl Assignment {
    pub fn link(&self) -> Link {
        Link {
            bs: self.bs,
            subchannel: self.subchannel,
        }
    }
}

/// Association, subchannels and TDD switching points for one slot.
///
/// `switch_points[b]` is the subslot after which BS `b` turns to downlink.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decision {
    pub slot: u64,
    pub association: Vec<Assignment>,
    pub switch_points: Vec<usize>,
}

impl Decision {
    /// User → link map. Later duplicates win; only meaningful once
    /// [`validate_decision`] came back clean.
    pub fn links(&self) -> BTreeMap<UserId, Link> {
        self.association.iter().map(|a| (a.user, a.link())).collect()
    }

    pub fn link_of(&self, user: UserId) -> Option<Link> {
        self.association.iter().find(|a| a.user == user).map(Assignment::link)
    }
}

/// Why a scheduler could not produce a decision.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Subchannel(#[from] ScsaError),
    #[error("no idle subchannel left on {0}")]
    NoIdleSubchannel(BsId),
}

impl Decision {
    /// Assembles a decision from per-user BS and subchannel maps.
    pub fn from_parts(
        slot: u64,
        assoc: &BTreeMap<UserId, BsId>,
        channels: &BTreeMap<UserId, usize>,
        switch_points: Vec<usize>,
    ) -> Self {
        Decision {
            slot,
            association: assoc
                .iter()
                .map(|(&user, &bs)| Assignment {
                    user,
                    bs,
                    subchannel: channels[&user],
                })
                .collect(),
            switch_points,
        }
    }
}

/// A broken structural constraint of a [`Decision`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SubchannelOutOfPlan {
        user: UserId,
        bs: BsId,
        subchannel: usize,
    },
    SubchannelShared {
        bs: BsId,
        subchannel: usize,
        users: Vec<UserId>,
    },
    MultipleLinks {
        user: UserId,
        count: usize,
    },
    ContinuityBroken {
        user: UserId,
        before: Option<Link>,
        after: Option<Link>,
    },
    SwitchPointOutOfRange {
        bs: BsId,
        point: usize,
    },
    MacroSwitchMismatch {
        points: Vec<usize>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SubchannelOutOfPlan { user, bs, subchannel } => {
                write!(f, "{user} assigned subchannel {subchannel} outside the plan of {bs}")
            }
            Violation::SubchannelShared { bs, subchannel, users } => write!(
                f,
                "subchannel {subchannel} of {bs} serves more than one user: {users:?}"
            ),
            Violation::MultipleLinks { user, count } => {
                write!(f, "{user} holds {count} links, at most one allowed")
            }
            Violation::ContinuityBroken { user, before, after } => write!(
                f,
                "{user} did not request reassociation but its link changed from {before:?} to {after:?}"
            ),
            Violation::SwitchPointOutOfRange { bs, point } => {
                write!(f, "switch point {point} of {bs} outside 1..N_s-1")
            }
            Violation::MacroSwitchMismatch { points } => {
                write!(f, "macro switch points differ: {points:?}")
            }
        }
    }
}

/// Checks the structural constraints of a slot decision: subchannel
/// exclusivity per BS, single association per user, link continuity for users
/// outside `reassoc`, switch points in `1..=N_s-1` and macro synchronization.
///
/// Demand satisfaction is not checked here; the engine marks users that miss
/// their demand for reassociation in the next slot.
///
/// Unknown BS or user ids are hard errors rather than violations.
pub fn validate_decision(
    decision: &Decision,
    config: &NetworkConfig,
    n_users: usize,
    previous: Option<&Decision>,
    reassoc: &BTreeSet<UserId>,
) -> Result<Vec<Violation>, ModelError> {
    let mut violations = Vec::new();

    if decision.switch_points.len() != config.base_stations.len() {
        return Err(ModelError::InvalidConfig(format!(
            "decision carries {} switch points for {} base stations",
            decision.switch_points.len(),
            config.base_stations.len()
        )));
    }
    for a in &decision.association {
        if a.user.0 >= n_users {
            return Err(ModelError::UnknownUser(a.user.0));
        }
        config.bs(a.bs)?;
    }
    for &u in reassoc {
        if u.0 >= n_users {
            return Err(ModelError::UnknownUser(u.0));
        }
    }

    let mut per_user: BTreeMap<UserId, usize> = BTreeMap::new();
    let mut per_channel: BTreeMap<(BsId, usize), Vec<UserId>> = BTreeMap::new();
    for a in &decision.association {
        *per_user.entry(a.user).or_default() += 1;
        if a.subchannel >= config.base_stations[a.bs.0].subchannel_count {
            violations.push(Violation::SubchannelOutOfPlan {
                user: a.user,
                bs: a.bs,
                subchannel: a.subchannel,
            });
        }
        per_channel.entry((a.bs, a.subchannel)).or_default().push(a.user);
    }
    for ((bs, subchannel), users) in per_channel {
        if users.len() > 1 {
            violations.push(Violation::SubchannelShared { bs, subchannel, users });
        }
    }
    for (&user, &count) in &per_user {
        if count > 1 {
            violations.push(Violation::MultipleLinks { user, count });
        }
    }

    let before = previous.map(Decision::links).unwrap_or_default();
    let after = decision.links();
    for u in (0..n_users).map(UserId) {
        if reassoc.contains(&u) {
            continue;
        }
        let (b, a) = (before.get(&u).copied(), after.get(&u).copied());
        if b != a {
            violations.push(Violation::ContinuityBroken {
                user: u,
                before: b,
                after: a,
            });
        }
    }

    let n_s = config.n_subslots;
    for (i, &point) in decision.switch_points.iter().enumerate() {
        if point < 1 || point > n_s - 1 {
            violations.push(Violation::SwitchPointOutOfRange { bs: BsId(i), point });
        }
    }
    let macro_points: Vec<usize> = config
        .base_stations
        .iter()
        .filter(|b| b.class == BsClass::Macro)
        .map(|b| decision.switch_points[b.id.0])
        .collect();
    if macro_points.windows(2).any(|w| w[0] != w[1]) {
        violations.push(Violation::MacroSwitchMismatch { points: macro_points });
    }

    Ok(violations)
}
