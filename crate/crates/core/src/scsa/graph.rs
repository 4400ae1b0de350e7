//! Per-band interference graph over connections.

use super::ScsaError;
use crate::model::{BsClass, BsId, UserId};
use crate::radio::{beam_gain, mixed_inverse_loss, Entity, Snapshot};

/// Edge between two graph vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Edge {
    /// The two may never share a subchannel.
    Conflict,
    /// Interference power (W) if they do.
    Weight(f64),
}

/// A served user, as seen by the subchannel allocator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Connection {
    pub user: UserId,
    pub bs: BsId,
    /// Previous subchannel of an ongoing user.
    pub locked: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub members: Vec<Connection>,
    /// Channel every member must keep, for collapsed ongoing groups.
    pub locked: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceGraph {
    pub band: BsClass,
    pub vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl InterferenceGraph {
    /// Builds a graph from explicit vertices and a row-major edge matrix.
    /// The matrix must be symmetric with `Weight(0)` on the diagonal.
    pub fn from_parts(band: BsClass, vertices: Vec<Vertex>, edges: Vec<Edge>) -> Result<Self, ScsaError> {
        let n = vertices.len();
        if edges.len() != n * n {
            return Err(ScsaError::Malformed(format!("{} edges for {n} vertices", edges.len())));
        }
        for i in 0..n {
            if edges[i * n + i] != Edge::Weight(0.0) {
                return Err(ScsaError::Malformed(format!("self edge on vertex {i}")));
            }
            for j in 0..n {
                if edges[i * n + j] != edges[j * n + i] {
                    return Err(ScsaError::Malformed(format!("edge {i}-{j} is not symmetric")));
                }
                if let Edge::Weight(w) = edges[i * n + j] {
                    if !(w >= 0.0 && w.is_finite()) {
                        return Err(ScsaError::Malformed(format!("edge {i}-{j} has weight {w}")));
                    }
                }
            }
        }
        Ok(Self { band, vertices, edges })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize, j: usize) -> Edge {
        self.edges[i * self.len() + j]
    }

    pub fn conflicts(&self, i: usize, j: usize) -> bool {
        self.edge(i, j) == Edge::Conflict
    }

    /// Interference weight, 0 for conflicting pairs.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.edge(i, j) {
            Edge::Weight(w) => w,
            Edge::Conflict => 0.0,
        }
    }

    pub fn is_locked(&self, i: usize) -> bool {
        self.vertices[i].locked.is_some()
    }
}

fn conflicting(a: &Connection, b: &Connection) -> bool {
    a.bs == b.bs || matches!((a.locked, b.locked), (Some(x), Some(y)) if x != y)
}

/// Worst-case average interference between two connections of the same band
/// if they were put on one subchannel.
///
/// With `n1`, `n2` the switching points of the two serving BSs, the co-link
/// terms (BS→other user, user→other BS) are weighted by the number of subslots
/// in which both links point the same way, the cross-link terms (BS→BS,
/// user→user) by the number of subslots in which they point opposite ways.
/// The largest weighted term, divided by `N_s`, is the edge weight.
pub fn pairwise_interference(snap: &Snapshot, a: &Connection, b: &Connection, switch_points: &[usize]) -> f64 {
    let band = snap.config.base_stations[a.bs.0].class;
    let n_s = snap.config.n_subslots as f64;
    let (n1, n2) = (switch_points[a.bs.0] as f64, switch_points[b.bs.0] as f64);
    let (ua, ba, ub, bb) = (
        Entity::User(a.user),
        Entity::Bs(a.bs),
        Entity::User(b.user),
        Entity::Bs(b.bs),
    );
    let partner = |e: Entity| match e {
        e if e == ua => ba,
        e if e == ba => ua,
        e if e == ub => bb,
        _ => ub,
    };
    // gain of x towards y while x is aimed at its own partner
    let g = |x: Entity, y: Entity| {
        beam_gain(
            &snap.antenna(x, band),
            snap.position(x),
            snap.position(partner(x)),
            snap.position(y),
        )
    };
    let avg = |x: Entity, y: Entity| {
        let gain = g(x, y) * g(y, x);
        if gain == 0.0 {
            0.0
        } else {
            snap.tx_power_w(x) * gain * mixed_inverse_loss(snap.config, band, snap.distance(x, y))
        }
    };
    let co_dl = n_s - n1.max(n2);
    let co_ul = n1.min(n2);
    let terms = [
        co_dl * avg(ba, ub),
        co_dl * avg(bb, ua),
        co_ul * avg(ua, bb),
        co_ul * avg(ub, ba),
        (n2 - n1).max(0.0) * avg(ba, bb),
        (n1 - n2).max(0.0) * avg(bb, ba),
        (n1 - n2).max(0.0) * avg(ua, ub),
        (n2 - n1).max(0.0) * avg(ub, ua),
    ];
    terms.into_iter().fold(0.0, f64::max) / n_s
}

/// Interference graph of one band's connections, with ongoing connections
/// that share a subchannel collapsed into one vertex (their edges summed).
///
/// Vertices are ordered by their smallest member user id.
pub fn build_graph(
    snap: &Snapshot,
    band: BsClass,
    connections: &[Connection],
    switch_points: &[usize],
) -> Result<InterferenceGraph, ScsaError> {
    let mut conns: Vec<Connection> = connections.to_vec();
    conns.sort_by_key(|c| c.user);
    let mut vertices: Vec<Vertex> = Vec::new();
    for c in conns {
        let group = c
            .locked
            .and_then(|ch| vertices.iter_mut().find(|v| v.locked == Some(ch)));
        match group {
            Some(v) => v.members.push(c),
            None => vertices.push(Vertex {
                members: vec![c],
                locked: c.locked,
            }),
        }
    }
    let n = vertices.len();
    let mut edges = vec![Edge::Weight(0.0); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut e = Edge::Weight(0.0);
            'pairs: for a in &vertices[i].members {
                for b in &vertices[j].members {
                    if conflicting(a, b) {
                        e = Edge::Conflict;
                        break 'pairs;
                    }
                    if let Edge::Weight(w) = e {
                        e = Edge::Weight(w + pairwise_interference(snap, a, b, switch_points));
                    }
                }
            }
            edges[i * n + j] = e;
            edges[j * n + i] = e;
        }
    }
    InterferenceGraph::from_parts(band, vertices, edges)
}
