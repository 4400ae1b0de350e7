//! Subchannel allocation by spectral clustering.
//!
//! Each band is handled on its own: build the interference graph of the
//! band's connections, turn interference into similarity, cluster the
//! Laplacian embedding into at most `|C|` groups, repair any cluster that
//! holds conflicting connections, and give every cluster its own subchannel.

pub mod graph;
pub mod repair;
pub mod similarity;
pub mod spectral;

pub use graph::{build_graph, pairwise_interference, Connection, Edge, InterferenceGraph, Vertex};
pub use repair::{assign_subchannels, exhaustive_optimum, repair_conflicts, retained_interference};
pub use similarity::{build_similarity, laplacian};
pub use spectral::{kmeans, spectral_cluster, SpectralReport};

use crate::model::{BsClass, BsId, UserId};
use crate::radio::Snapshot;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScsaError {
    #[error("no conflict-free subchannel layout for vertex {vertex} on the {band:?} band")]
    Infeasible { band: BsClass, vertex: usize },
    #[error("symmetric eigensolver did not converge on a {vertices}-vertex Laplacian")]
    EigenFailed { vertices: usize },
    #[error("malformed interference graph: {0}")]
    Malformed(String),
}

/// Result of clustering one band's graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPlan {
    /// Subchannel per vertex of the graph.
    pub channels: Vec<usize>,
    pub clusters: Vec<usize>,
    pub report: SpectralReport,
}

/// Runs the full pipeline on one graph with `n_channels` subchannels.
pub fn cluster_graph(g: &InterferenceGraph, n_channels: usize, rng: &mut ChaCha8Rng) -> Result<BandPlan, ScsaError> {
    if g.is_empty() {
        return Ok(BandPlan {
            channels: Vec::new(),
            clusters: Vec::new(),
            report: SpectralReport::default(),
        });
    }
    let k = n_channels.min(g.len());
    let lap = laplacian(&build_similarity(g));
    let (labels, report) = spectral_cluster(&lap, k, rng)?;
    let clusters = repair_conflicts(&labels, k, g)?;
    let channels = assign_subchannels(&clusters, k, g, n_channels)?;
    Ok(BandPlan {
        channels,
        clusters,
        report,
    })
}

fn band_rng(seed: u64, slot: u64, band: BsClass) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&slot.to_le_bytes());
    key[16..24].copy_from_slice(b"k-means ");
    key[24] = band as u8;
    ChaCha8Rng::from_seed(key)
}

/// Output of [`allocate`]: subchannel per associated user, plus one spectral
/// report per non-empty band.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    pub channels: BTreeMap<UserId, usize>,
    pub reports: Vec<SpectralReport>,
}

/// Allocates subchannels to every associated user.
///
/// `assoc` maps every associated user to its BS, `locked` the previous
/// subchannel of users that must keep it.
pub fn allocate(
    snap: &Snapshot,
    assoc: &BTreeMap<UserId, BsId>,
    locked: &BTreeMap<UserId, usize>,
    switch_points: &[usize],
    seed: u64,
    slot: u64,
) -> Result<Allocation, ScsaError> {
    let mut out = Allocation::default();
    for band in [BsClass::Macro, BsClass::Pico] {
        let conns: Vec<Connection> = assoc
            .iter()
            .filter(|(_, b)| snap.config.base_stations[b.0].class == band)
            .map(|(&user, &bs)| Connection {
                user,
                bs,
                locked: locked.get(&user).copied(),
            })
            .collect();
        if conns.is_empty() {
            continue;
        }
        let g = build_graph(snap, band, &conns, switch_points)?;
        let plan = cluster_graph(&g, snap.config.band_subchannels(band), &mut band_rng(seed, slot, band))?;
        for (v, vertex) in g.vertices.iter().enumerate() {
            for m in &vertex.members {
                out.channels.insert(m.user, plan.channels[v]);
            }
        }
        out.reports.push(plan.report);
    }
    Ok(out)
}
