//! Spectral embedding and k-means.

use super::ScsaError;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

/// Numerical health of one Laplacian eigendecomposition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralReport {
    pub vertices: usize,
    pub max_row_sum_abs: f64,
    /// Largest `‖L v − λ v‖` over all eigenpairs.
    pub max_residual: f64,
    pub min_eigenvalue: f64,
}

pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOL: f64 = 1e-9;

/// Eigenvalues closer than this are treated as a tie.
const EIGEN_TIE: f64 = 1e-10;

/// Clusters the vertices of a Laplacian into `k` groups: embed each vertex as
/// its row in the matrix of the `k` eigenvectors with the smallest
/// eigenvalues, then run k-means on the embedding.
pub fn spectral_cluster<R: Rng + ?Sized>(
    lap: &DMatrix<f64>,
    k: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, SpectralReport), ScsaError> {
    let n = lap.nrows();
    if n == 0 {
        return Ok((Vec::new(), SpectralReport::default()));
    }
    if k == 0 || k > n {
        return Err(ScsaError::Malformed(format!("k = {k} for {n} vertices")));
    }
    let eig =
        SymmetricEigen::try_new(lap.clone(), f64::EPSILON, 10_000).ok_or(ScsaError::EigenFailed { vertices: n })?;

    let mut report = SpectralReport {
        vertices: n,
        max_row_sum_abs: (0..n).map(|i| lap.row(i).sum().abs()).fold(0.0, f64::max),
        max_residual: 0.0,
        min_eigenvalue: eig.eigenvalues.min(),
    };
    for (idx, lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        let r = (lap * v - v * *lambda).norm();
        report.max_residual = report.max_residual.max(r);
    }

    // canonical sign: first clearly nonzero entry positive
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let col = eig.eigenvectors.column(c);
            let sign = col.iter().find(|x| x.abs() > 1e-12).map_or(1.0, |x| x.signum());
            col.iter().map(|x| x * sign).collect()
        })
        .collect();
    // ascending eigenvalues; runs of near-equal values are then reordered by
    // their vectors so degenerate subspaces come out the same on every run
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let lex = |a: &usize, b: &usize| {
        vectors[*a]
            .iter()
            .zip(&vectors[*b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(a.cmp(b))
    };
    let mut start = 0;
    while start < n {
        let head = eig.eigenvalues[order[start]];
        let mut end = start + 1;
        while end < n && eig.eigenvalues[order[end]] - head <= EIGEN_TIE * head.abs().max(1.0) {
            end += 1;
        }
        order[start..end].sort_by(lex);
        start = end;
    }
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| order[..k].iter().map(|&c| vectors[c][i]).collect())
        .collect();
    Ok((kmeans(&points, k, rng), report))
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with farthest-point seeding (first center drawn from
/// `rng`). Ties go to the lowest cluster index; an emptied cluster keeps its
/// previous center.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    if n == 0 || k == 0 {
        return vec![0; n];
    }
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let mut best = (0usize, -1.0f64);
        for (i, p) in points.iter().enumerate() {
            let d = centers.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min);
            if d > best.1 {
                best = (i, d);
            }
        }
        centers.push(points[best.0].clone());
    }

    let mut labels = vec![0usize; n];
    for _ in 0..KMEANS_MAX_ITER {
        for (i, p) in points.iter().enumerate() {
            let mut best = (0usize, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = dist2(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            labels[i] = best.0;
        }
        let dim = points[0].len();
        let mut shift = 0.0f64;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mean: Vec<f64> = (0..dim)
                .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64)
                .collect();
            shift = shift.max(dist2(&mean, center).sqrt());
            *center = mean;
        }
        if shift < KMEANS_TOL {
            break;
        }
    }
    labels
}
