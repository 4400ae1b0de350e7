//! TDD switching points.
//!
//! Every associated user has an ideal split that equalizes its uplink and
//! downlink supply-demand ratios. A pico cell takes the mean of its own users'
//! ideals; all macro cells share the mean over every macro user.

use crate::model::{BsClass, BsId, NetworkConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Round half up, then clip.
    #[default]
    HalfUp,
    /// Ceiling, then clip.
    Ceiling,
}

/// Real-valued subslot count that balances both supply-demand ratios,
/// `R_UL·r_dl / (R_UL·r_dl + R_DL·r_ul) · N_s`. Falls back to `N_s / 2` when
/// both pseudo rates vanish.
pub fn user_ideal_switch(ul_rate: f64, dl_rate: f64, r_ul: f64, r_dl: f64, n_s: usize) -> f64 {
    let num = r_ul * dl_rate;
    let den = num + r_dl * ul_rate;
    if den > 0.0 && den.is_finite() {
        num / den * n_s as f64
    } else {
        n_s as f64 / 2.0
    }
}

fn settle(x: f64, n_s: usize, rounding: Rounding) -> usize {
    let r = match rounding {
        Rounding::HalfUp => (x + 0.5).floor(),
        Rounding::Ceiling => x.ceil(),
    };
    (r.max(1.0) as usize).min(n_s - 1)
}

/// Switching point of every BS from the ideal points of its users.
///
/// `ideals` lists `(serving BS, ideal point)` per associated user. A BS with
/// no users (or a macro layer with no users) gets `N_s / 2`.
pub fn select_switch_points(config: &NetworkConfig, ideals: &[(BsId, f64)], rounding: Rounding) -> Vec<usize> {
    let n_s = config.n_subslots;
    // grouped and sorted so the mean does not depend on the order of `ideals`
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); config.base_stations.len()];
    let mut macro_group = Vec::new();
    for &(b, x) in ideals {
        match config.base_stations[b.0].class {
            BsClass::Macro => macro_group.push(x),
            BsClass::Pico => groups[b.0].push(x),
        }
    }
    let mean = |v: &mut Vec<f64>| {
        if v.is_empty() {
            return n_s as f64 / 2.0;
        }
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>() / v.len() as f64
    };
    let macro_point = mean(&mut macro_group);
    config
        .base_stations
        .iter()
        .map(|b| match b.class {
            BsClass::Macro => settle(macro_point, n_s, rounding),
            BsClass::Pico => settle(mean(&mut groups[b.id.0]), n_s, rounding),
        })
        .collect()
}

/// Fixed midpoint split used by the baselines.
pub fn midpoint_switch_points(config: &NetworkConfig) -> Vec<usize> {
    vec![(config.n_subslots / 2).clamp(1, config.n_subslots - 1); config.base_stations.len()]
}
