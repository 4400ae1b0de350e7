//! The full OMSC pipeline: optimal-matching association, per-BS switching
//! points from the users' balance points, then spectral subchannel allocation.

use crate::association::{associate, pair_rates, ActiveSet, Variant};
use crate::decision::{Decision, ScheduleError, SlotInput};
use crate::engine::Scheduler;
use crate::scsa::{self, SpectralReport};
use crate::tdd::{select_switch_points, user_ideal_switch, Rounding};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct Omsc {
    pub variant: Variant,
    pub rounding: Rounding,
    reports: Vec<SpectralReport>,
}

impl Omsc {
    pub fn new(variant: Variant, rounding: Rounding) -> Self {
        Self {
            variant,
            rounding,
            reports: Vec::new(),
        }
    }
}

impl Scheduler for Omsc {
    fn decide(&mut self, input: &SlotInput) -> Result<Decision, ScheduleError> {
        let snap = &input.snap;
        let cfg = snap.config;
        let assoc = associate(input, self.variant)?;

        let active = ActiveSet::from_input(input);
        let ideals: Vec<_> = assoc
            .iter()
            .map(|(&u, &b)| {
                let (ul, dl) = pair_rates(snap, &active, self.variant, b, u);
                let d = snap.users[u.0].demand;
                (b, user_ideal_switch(ul, dl, d.ul_bps, d.dl_bps, cfg.n_subslots))
            })
            .collect();
        let points = select_switch_points(cfg, &ideals, self.rounding);

        let locked: BTreeMap<_, _> = input.ongoing().into_iter().map(|(u, l)| (u, l.subchannel)).collect();
        let alloc = scsa::allocate(snap, &assoc, &locked, &points, input.seed, input.slot)?;
        self.reports = alloc.reports;
        Ok(Decision::from_parts(input.slot, &assoc, &alloc.channels, points))
    }

    fn spectral_reports(&self) -> &[SpectralReport] {
        &self.reports
    }
}
