//! Maximum-weight bipartite matching (Kuhn-Munkres).
//!
//! Rectangular inputs are padded with zero-weight rows/columns; a row that
//! ends up on a padding column is reported as unassigned.

use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// For each input row, the matched column (`None` when the row landed on
    /// padding).
    pub row_to_col: Vec<Option<usize>>,
    pub total: f64,
}

/// Solves the maximum-weight assignment of `weights` (rows × cols, entries
/// finite and nonnegative).
///
/// Maximization is turned into minimization with `cost = max - w`. The solver
/// is the potential-based shortest augmenting path form of the Hungarian
/// method, `O(n³)` on the padded square. Rows are inserted in ascending order
/// and every scan over columns runs in ascending order with strict
/// comparisons, so ties always resolve the same way.
pub fn optimal_matching(weights: &[Vec<f64>]) -> Result<Matching, ModelError> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let mut wmax = 0.0f64;
    for r in weights {
        if r.len() != cols {
            return Err(ModelError::InvalidConfig("ragged weight matrix".into()));
        }
        for &w in r {
            if !w.is_finite() || w < 0.0 {
                return Err(ModelError::Domain {
                    name: "matching weight",
                    value: w,
                    domain: "[0, inf)",
                });
            }
            wmax = wmax.max(w);
        }
    }
    let n = rows.max(cols);
    if n == 0 {
        return Ok(Matching {
            row_to_col: vec![None; rows],
            total: 0.0,
        });
    }
    let cost = |i: usize, j: usize| -> f64 {
        let w = if i < rows && j < cols { weights[i][j] } else { 0.0 };
        wmax - w
    };

    // 1-based arrays, index 0 is the virtual root
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row matched to column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![None; rows];
    let mut total = 0.0;
    for j in 1..=n {
        let i = p[j] - 1;
        if i < rows && j - 1 < cols {
            row_to_col[i] = Some(j - 1);
            total += weights[i][j - 1];
        }
    }
    Ok(Matching { row_to_col, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(w: &[Vec<f64>]) -> f64 {
        fn go(w: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == w.len() {
                return 0.0;
            }
            // a row may also stay unmatched (weight 0)
            let mut best = go(w, row + 1, used);
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(w[row][j] + go(w, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let cols = w.first().map_or(0, Vec::len);
        go(w, 0, &mut vec![false; cols])
    }

    #[test]
    fn two_by_two_reference() {
        let m = optimal_matching(&[vec![1.0, 5.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(m.row_to_col, vec![Some(1), Some(0)]);
        assert_eq!(m.total, 7.0);
    }

    #[test]
    fn diagonal_dominant_gives_identity() {
        let w = vec![vec![9.0, 1.0, 2.0], vec![1.0, 8.0, 1.0], vec![0.5, 2.0, 7.0]];
        let m = optimal_matching(&w).unwrap();
        assert_eq!(m.row_to_col, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn more_rows_than_columns_leaves_rows_out() {
        let w = vec![vec![1.0], vec![3.0], vec![2.0]];
        let m = optimal_matching(&w).unwrap();
        assert_eq!(m.row_to_col, vec![None, Some(0), None]);
        assert_eq!(m.total, 3.0);
    }

    #[test]
    fn empty_and_invalid() {
        assert_eq!(optimal_matching(&[]).unwrap().total, 0.0);
        assert!(optimal_matching(&[vec![f64::NAN]]).is_err());
        assert!(optimal_matching(&[vec![-1.0]]).is_err());
        assert!(optimal_matching(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn large_instance_is_fast() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(256);
        let w: Vec<Vec<f64>> = (0..256)
            .map(|_| (0..256).map(|_| rng.random_range(0.0..10.0)).collect())
            .collect();
        let t = std::time::Instant::now();
        let m = optimal_matching(&w).unwrap();
        assert!(t.elapsed().as_secs_f64() < 1.0);
        assert!(m.row_to_col.iter().all(Option::is_some));
    }

    fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::collection::vec(0u8..=10, c), r)
                .prop_map(|m| m.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect())
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(w in matrix()) {
            let m = optimal_matching(&w).unwrap();
            prop_assert_eq!(m.total, brute(&w));
            let mut seen = std::collections::BTreeSet::new();
            for c in m.row_to_col.iter().flatten() {
                prop_assert!(seen.insert(*c));
            }
        }

        #[test]
        fn scaling_keeps_the_assignment(w in matrix(), k in 0i32..6) {
            // powers of two scale every intermediate exactly
            let s = 2f64.powi(k - 2);
            let scaled: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|x| x * s).collect()).collect();
            prop_assert_eq!(
                optimal_matching(&w).unwrap().row_to_col,
                optimal_matching(&scaled).unwrap().row_to_col
            );
        }
    }
}
