//! Conflict repair and cluster → subchannel mapping.

use super::graph::InterferenceGraph;
use super::ScsaError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pass {
    /// Separate ongoing vertices locked to different subchannels.
    Locked,
    /// Separate everything else that conflicts.
    Any,
}

fn members(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut m = vec![Vec::new(); k];
    for (v, &c) in labels.iter().enumerate() {
        m[c].push(v);
    }
    m
}

/// Vertices of `cluster` that the pass is allowed to move.
fn candidates(g: &InterferenceGraph, cluster: &[usize], pass: Pass) -> Vec<usize> {
    cluster
        .iter()
        .copied()
        .filter(|&v| match pass {
            Pass::Locked => g.is_locked(v) && cluster.iter().any(|&w| w != v && g.is_locked(w) && g.conflicts(v, w)),
            Pass::Any => !g.is_locked(v) && cluster.iter().any(|&w| w != v && g.conflicts(v, w)),
        })
        .collect()
}

/// Cheapest cluster `v` may move to, as `(cluster, interference to v there)`.
fn target(g: &InterferenceGraph, clusters: &[Vec<usize>], v: usize, own: usize, pass: Pass) -> Option<(usize, f64)> {
    let pick = |allowed: &dyn Fn(&[usize]) -> bool| {
        clusters
            .iter()
            .enumerate()
            .filter(|&(c, m)| c != own && allowed(m))
            .map(|(c, m)| (c, m.iter().map(|&w| g.weight(v, w)).sum::<f64>()))
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 <= cur.1 => Some(b),
                _ => Some(cur),
            })
    };
    let free = |m: &[usize]| m.iter().all(|&w| !g.conflicts(v, w));
    pick(&free).or_else(|| match pass {
        // the later pass cleans up whatever unlocked conflicts this leaves
        Pass::Locked => pick(&|m: &[usize]| m.iter().all(|&w| !g.is_locked(w))),
        Pass::Any => None,
    })
}

/// Moves vertices until no cluster holds two conflicting vertices.
///
/// Locked (ongoing) vertices are separated first, then the rest. Each round
/// looks at the largest offending cluster (ties: lowest vertex id), finds for
/// every movable vertex its target cluster (no conflicts with it, least
/// interference to it), and moves the one whose move cuts the most
/// interference weight.
pub fn repair_conflicts(labels: &[usize], k: usize, g: &InterferenceGraph) -> Result<Vec<usize>, ScsaError> {
    let mut labels = labels.to_vec();
    for pass in [Pass::Locked, Pass::Any] {
        loop {
            let clusters = members(&labels, k);
            let mut order: Vec<usize> = (0..k)
                .filter(|&c| !candidates(g, &clusters[c], pass).is_empty())
                .collect();
            order.sort_by_key(|&c| (std::cmp::Reverse(clusters[c].len()), clusters[c][0]));
            let Some(&c) = order.first() else { break };

            let mut best: Option<(f64, usize, usize)> = None;
            let cands = candidates(g, &clusters[c], pass);
            for &v in &cands {
                let Some((t, into)) = target(g, &clusters, v, c, pass) else {
                    continue;
                };
                let out: f64 = clusters[c]
                    .iter()
                    .filter(|&&w| w != v && !g.conflicts(v, w))
                    .map(|&w| g.weight(v, w))
                    .sum();
                let inc = out - into;
                if best.is_none_or(|b| inc > b.0) {
                    best = Some((inc, v, t));
                }
            }
            let Some((_, v, t)) = best else {
                return Err(ScsaError::Infeasible {
                    band: g.band,
                    vertex: cands[0],
                });
            };
            labels[v] = t;
        }
    }
    Ok(labels)
}

/// Subchannel of each cluster: clusters holding a locked vertex keep its
/// subchannel, the other non-empty clusters take the lowest free subchannels
/// in cluster order. Returns the subchannel of every vertex.
pub fn assign_subchannels(
    labels: &[usize],
    k: usize,
    g: &InterferenceGraph,
    n_channels: usize,
) -> Result<Vec<usize>, ScsaError> {
    let clusters = members(labels, k);
    let mut channel: Vec<Option<usize>> = vec![None; k];
    let mut used = vec![false; n_channels];
    for (c, m) in clusters.iter().enumerate() {
        for &v in m {
            if let Some(ch) = g.vertices[v].locked {
                if ch >= n_channels || channel[c].is_some_and(|x| x != ch) || (channel[c].is_none() && used[ch]) {
                    return Err(ScsaError::Infeasible {
                        band: g.band,
                        vertex: v,
                    });
                }
                channel[c] = Some(ch);
                used[ch] = true;
            }
        }
    }
    let mut free = (0..n_channels).filter(|&ch| !used[ch]);
    for (c, m) in clusters.iter().enumerate() {
        if channel[c].is_none() && !m.is_empty() {
            channel[c] = Some(free.next().ok_or(ScsaError::Infeasible {
                band: g.band,
                vertex: m[0],
            })?);
        }
    }
    Ok(labels
        .iter()
        .map(|&c| channel[c].expect("non-empty cluster has a channel"))
        .collect())
}

/// Total interference kept inside clusters (the quantity the allocator
/// minimizes); infinite if any cluster holds a conflict.
pub fn retained_interference(g: &InterferenceGraph, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..g.len() {
        for j in (i + 1)..g.len() {
            if labels[i] == labels[j] {
                if g.conflicts(i, j) {
                    return f64::INFINITY;
                }
                total += g.weight(i, j);
            }
        }
    }
    total
}

/// Best conflict-free labeling into at most `k` clusters by enumeration of
/// all `k^n` labelings. Only meant for small graphs.
pub fn exhaustive_optimum(g: &InterferenceGraph, k: usize) -> (f64, Vec<usize>) {
    let n = g.len();
    let mut labels = vec![0usize; n];
    let mut best = (f64::INFINITY, labels.clone());
    if n == 0 {
        return (0.0, labels);
    }
    loop {
        let r = retained_interference(g, &labels);
        if r < best.0 {
            best = (r, labels.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}
