//! Interference → similarity mapping and the graph Laplacian.

use super::graph::{Edge, InterferenceGraph};
use nalgebra::DMatrix;

/// Similarity of every vertex pair.
///
/// Conflicting pairs get 0. An interfering pair gets the smaller of the two
/// leave-one-out ratios: the share of each side's total interference that
/// does *not* come from the other side. A side with no interference at all
/// counts as ratio 1, so pairs that cannot hurt each other are maximally
/// similar.
pub fn build_similarity(g: &InterferenceGraph) -> DMatrix<f64> {
    let n = g.len();
    let totals: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g.weight(i, j)).sum()).collect();
    let ratio = |i: usize, w: f64| {
        if totals[i] > 0.0 {
            ((totals[i] - w) / totals[i]).clamp(0.0, 1.0)
        } else {
            1.0
        }
    };
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        match g.edge(i, j) {
            Edge::Conflict => 0.0,
            Edge::Weight(w) => ratio(i, w).min(ratio(j, w)),
        }
    })
}

/// `D - S` with `D` the diagonal of row sums of `S`.
pub fn laplacian(s: &DMatrix<f64>) -> DMatrix<f64> {
    let mut l = -s.clone();
    for i in 0..s.nrows() {
        l[(i, i)] += s.row(i).sum();
    }
    l
}
