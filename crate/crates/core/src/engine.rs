//! The slot loop.
//!
//! Per slot: move users, collect reassociation requests, ask the scheduler
//! for a decision (timed), check it, realize the channel, evaluate perceived
//! rates and mark satisfaction. Unsatisfied users keep their link for the
//! rest of the slot and ask to reassociate in the next one.

use crate::association::Variant;
use crate::baselines::{ChannelScheme, Lcuas, Sdmab};
use crate::decision::{validate_decision, Decision, ScheduleError, SlotInput, Violation};
use crate::geometry::Vec2;
use crate::mobility::{advance, new_flight};
use crate::model::{
    Association, Demand, ModelError, NetworkConfig, NetworkParams, RadioEnv, SlotMetrics, UserId, UserRecord,
    UserState, STREAM_MOBILITY, STREAM_POPULATION,
};
use crate::omsc::Omsc;
use crate::radio::{perceived_rates, GainContext, RealizedChannel, Snapshot};
use crate::scsa::SpectralReport;
use crate::tdd::Rounding;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

/// A per-slot decision maker.
pub trait Scheduler {
    fn decide(&mut self, input: &SlotInput) -> Result<Decision, ScheduleError>;

    /// Feedback after the slot has been played out.
    fn observe(&mut self, _decision: &Decision, _metrics: &SlotMetrics, _input: &SlotInput) {}

    /// Health reports of the eigendecompositions of the last decision, if any.
    fn spectral_reports(&self) -> &[SpectralReport] {
        &[]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Omsc,
    OmscSinr,
    Lcuas,
    LcuasSc,
    Sdmab,
    SdmabSc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Omsc,
        Algorithm::OmscSinr,
        Algorithm::Lcuas,
        Algorithm::LcuasSc,
        Algorithm::Sdmab,
        Algorithm::SdmabSc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Omsc => "omsc",
            Algorithm::OmscSinr => "omsc-sinr",
            Algorithm::Lcuas => "lcuas",
            Algorithm::LcuasSc => "lcuas-sc",
            Algorithm::Sdmab => "sdmab",
            Algorithm::SdmabSc => "sdmab-sc",
        }
    }

    pub fn scheduler(self, config: &NetworkConfig, n_users: usize, rounding: Rounding) -> Box<dyn Scheduler + Send> {
        let n_bs = config.base_stations.len();
        match self {
            Algorithm::Omsc => Box::new(Omsc::new(Variant::Snr, rounding)),
            Algorithm::OmscSinr => Box::new(Omsc::new(Variant::Sinr, rounding)),
            Algorithm::Lcuas => Box::new(Lcuas::new(ChannelScheme::FirstIdle)),
            Algorithm::LcuasSc => Box::new(Lcuas::new(ChannelScheme::Spectral)),
            Algorithm::Sdmab => Box::new(Sdmab::new(ChannelScheme::FirstIdle, n_users, n_bs)),
            Algorithm::SdmabSc => Box::new(Sdmab::new(ChannelScheme::Spectral, n_users, n_bs)),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// Share of users per demand profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandClass {
    pub demand: Demand,
    pub weight: f64,
}

/// The 3:4:3 mix of uplink-heavy, symmetric and downlink-heavy users.
pub fn default_demand_mix() -> Vec<DemandClass> {
    vec![
        DemandClass {
            demand: Demand::mbps(15.0, 1.0),
            weight: 0.3,
        },
        DemandClass {
            demand: Demand::mbps(15.0, 15.0),
            weight: 0.4,
        },
        DemandClass {
            demand: Demand::mbps(0.1, 15.0),
            weight: 0.3,
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: NetworkParams,
    pub users: usize,
    pub demand_mix: Vec<DemandClass>,
    pub algorithm: Algorithm,
    pub slots: u64,
    pub seeds: Vec<u64>,
    pub rounding: Rounding,
    /// Measure decision wall time. Off gives byte-stable logs.
    pub timing: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            network: NetworkParams::default(),
            users: 40,
            demand_mix: default_demand_mix(),
            algorithm: Algorithm::Omsc,
            slots: 200,
            seeds: vec![1],
            rounding: Rounding::HalfUp,
            timing: true,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ModelError> {
        let total: f64 = self.demand_mix.iter().map(|c| c.weight).sum();
        if self.demand_mix.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::InvalidConfig(format!(
                "demand mix weights sum to {total}, not 1"
            )));
        }
        for c in &self.demand_mix {
            if !(c.weight >= 0.0) || !(c.demand.ul_bps > 0.0) || !(c.demand.dl_bps > 0.0) {
                return Err(ModelError::InvalidConfig(
                    "demand classes need weight ≥ 0 and positive rates".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Splits `n` users over the mix by largest remainder (ties to the earlier class).
pub fn demand_counts(n: usize, mix: &[DemandClass]) -> Vec<usize> {
    let exact: Vec<f64> = mix.iter().map(|c| c.weight * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..mix.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - counts[a] as f64, exact[b] - counts[b] as f64);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("slot {slot}: scheduler failed: {source}")]
    Schedule { slot: u64, source: ScheduleError },
    #[error("slot {slot}: decision breaks {} constraint(s): {}", violations.len(), join(violations))]
    Invalid { slot: u64, violations: Vec<Violation> },
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct World {
    pub config: NetworkConfig,
    pub env: RadioEnv,
    pub users: Vec<UserState>,
    /// Index of the next slot to play.
    pub slot: u64,
    pub seed: u64,
    pub previous: Option<Decision>,
    pub timing: bool,
    mobility_rng: ChaCha8Rng,
}

impl World {
    pub fn new(config: NetworkConfig, users: Vec<UserState>, seed: u64) -> Self {
        let mut mobility_rng = ChaCha8Rng::seed_from_u64(seed);
        mobility_rng.set_stream(STREAM_MOBILITY);
        Self {
            env: RadioEnv::new(&config),
            config,
            users,
            slot: 0,
            seed,
            previous: None,
            timing: true,
            mobility_rng,
        }
    }

    /// Builds the network and drops the population uniformly, demand
    /// profiles shuffled over user ids.
    pub fn from_scenario(scenario: &Scenario, seed: u64) -> Result<Self, ModelError> {
        scenario.validate()?;
        let config = scenario.network.build(seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_POPULATION);
        let mut demands: Vec<Demand> = demand_counts(scenario.users, &scenario.demand_mix)
            .into_iter()
            .zip(&scenario.demand_mix)
            .flat_map(|(n, c)| std::iter::repeat_n(c.demand, n))
            .collect();
        demands.shuffle(&mut rng);
        let area = config.area;
        let mut users = Vec::with_capacity(scenario.users);
        for (i, demand) in demands.into_iter().enumerate() {
            let position = Vec2::new(
                rng.random_range(area.min.x..=area.max.x),
                rng.random_range(area.min.y..=area.max.y),
            );
            let (phase, velocity) = new_flight(&mut rng, &config.levy, &area)?;
            users.push(UserState {
                id: UserId(i),
                position,
                velocity,
                phase,
                demand,
                assoc: Association::None,
                satisfied_last_slot: false,
            });
        }
        let mut w = World::new(config, users, seed);
        w.timing = scenario.timing;
        Ok(w)
    }

    pub fn snapshot(&self) -> Snapshot<'_> {
        Snapshot {
            config: &self.config,
            env: &self.env,
            users: &self.users,
        }
    }
}

/// Plays one slot.
pub fn step(world: &mut World, scheduler: &mut dyn Scheduler) -> Result<SlotMetrics, EngineError> {
    let slot = world.slot;
    let dt = world.config.slot_duration_s();
    let area = world.config.area;
    let levy = world.config.levy;
    for u in &mut world.users {
        advance(u, dt, &mut world.mobility_rng, &area, &levy)?;
    }

    let reassoc: BTreeSet<UserId> = world
        .users
        .iter()
        .filter(|u| u.requests_association())
        .map(|u| u.id)
        .collect();
    let snap = world.snapshot();
    let input = SlotInput {
        snap,
        slot,
        seed: world.seed,
        reassoc: &reassoc,
        previous: world.previous.as_ref(),
    };

    let started = Instant::now();
    let decision = scheduler
        .decide(&input)
        .map_err(|source| EngineError::Schedule { slot, source })?;
    let decision_time_us = if world.timing {
        started.elapsed().as_secs_f64() * 1e6
    } else {
        0.0
    };

    let violations = validate_decision(
        &decision,
        snap.config,
        snap.users.len(),
        world.previous.as_ref(),
        &reassoc,
    )?;
    if !violations.is_empty() {
        return Err(EngineError::Invalid { slot, violations });
    }

    let channel = RealizedChannel::new(snap, world.seed, slot);
    let gains = GainContext::new(&decision, snap.users.len());
    let mut rates = vec![(0.0, 0.0); snap.users.len()];
    for (u, ul, dl) in perceived_rates(&snap, &decision, &gains, &channel) {
        rates[u.0] = (ul, dl);
    }
    let links = decision.links();
    let mut metrics = SlotMetrics {
        slot,
        overall_rate_bps: 0.0,
        effective_rate_bps: 0.0,
        satisfied_count: 0,
        decision_time_us,
        users: Vec::with_capacity(snap.users.len()),
    };
    for u in snap.users {
        let link = links.get(&u.id).copied();
        let (ul, dl) = rates[u.id.0];
        let satisfied = link.is_some() && ul >= u.demand.ul_bps && dl >= u.demand.dl_bps;
        metrics.overall_rate_bps += ul + dl;
        if satisfied {
            metrics.effective_rate_bps += ul + dl;
            metrics.satisfied_count += 1;
        }
        metrics.users.push(UserRecord {
            user: u.id,
            link,
            ul_bps: ul,
            dl_bps: dl,
            satisfied,
        });
    }
    scheduler.observe(&decision, &metrics, &input);

    for (u, rec) in world.users.iter_mut().zip(&metrics.users) {
        u.assoc = match (rec.link, u.assoc) {
            (None, _) => Association::None,
            (
                Some(l),
                Association::Ongoing {
                    bs,
                    subchannel,
                    since_slot,
                },
            ) if l.bs == bs && l.subchannel == subchannel => Association::Ongoing {
                bs,
                subchannel,
                since_slot,
            },
            (Some(l), _) => Association::Ongoing {
                bs: l.bs,
                subchannel: l.subchannel,
                since_slot: slot,
            },
        };
        u.satisfied_last_slot = rec.satisfied;
    }
    world.previous = Some(decision);
    world.slot += 1;
    Ok(metrics)
}

/// Means over the slots of one or more runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub overall_rate_bps: f64,
    pub effective_rate_bps: f64,
    pub satisfied: f64,
    pub decision_time_us: f64,
}

impl Aggregate {
    pub fn of(slots: &[SlotMetrics]) -> Self {
        if slots.is_empty() {
            return Self::default();
        }
        let n = slots.len() as f64;
        let mean = |f: fn(&SlotMetrics) -> f64| slots.iter().map(f).sum::<f64>() / n;
        Self {
            overall_rate_bps: mean(|m| m.overall_rate_bps),
            effective_rate_bps: mean(|m| m.effective_rate_bps),
            satisfied: mean(|m| m.satisfied_count as f64),
            decision_time_us: mean(|m| m.decision_time_us),
        }
    }
}

/// One seeded repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub slots: Vec<SlotMetrics>,
    /// Every eigendecomposition health report of the run, in slot order.
    pub spectral: Vec<SpectralReport>,
}

impl SeedRun {
    pub fn aggregate(&self) -> Aggregate {
        Aggregate::of(&self.slots)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub algorithm: Algorithm,
    pub runs: Vec<SeedRun>,
}

impl RunLog {
    /// Mean of the per-seed means.
    pub fn aggregate(&self) -> Aggregate {
        let per: Vec<Aggregate> = self.runs.iter().map(SeedRun::aggregate).collect();
        if per.is_empty() {
            return Aggregate::default();
        }
        let n = per.len() as f64;
        Aggregate {
            overall_rate_bps: per.iter().map(|a| a.overall_rate_bps).sum::<f64>() / n,
            effective_rate_bps: per.iter().map(|a| a.effective_rate_bps).sum::<f64>() / n,
            satisfied: per.iter().map(|a| a.satisfied).sum::<f64>() / n,
            decision_time_us: per.iter().map(|a| a.decision_time_us).sum::<f64>() / n,
        }
    }
}

/// Plays `scenario.slots` slots for one seed.
pub fn run_seed(scenario: &Scenario, seed: u64) -> Result<SeedRun, EngineError> {
    let mut world = World::from_scenario(scenario, seed)?;
    let mut scheduler = scenario
        .algorithm
        .scheduler(&world.config, world.users.len(), scenario.rounding);
    let mut out = SeedRun {
        seed,
        slots: Vec::with_capacity(scenario.slots as usize),
        spectral: Vec::new(),
    };
    for _ in 0..scenario.slots {
        out.slots.push(step(&mut world, scheduler.as_mut())?);
        out.spectral.extend_from_slice(scheduler.spectral_reports());
    }
    Ok(out)
}

/// Runs every seed of the scenario, in parallel; the log lists them in
/// scenario order.
pub fn run(scenario: &Scenario) -> Result<RunLog, EngineError> {
    let runs = scenario
        .seeds
        .par_iter()
        .map(|&s| run_seed(scenario, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunLog {
        algorithm: scenario.algorithm,
        runs,
    })
}
