//! Minimum-cost perfect matching on a square cost matrix.

/// Optimal assignment by the Hungarian method (shortest augmenting paths with
/// potentials), `O(k³)`. Returns `perm` with `perm[row] = column`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return vec![];
    }
    // 1-based arrays, index 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched_row[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[matched_row[j] - 1] = j - 1;
    }
    perm
}

pub fn assignment_cost(cost: &[Vec<f64>], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

/// The lexicographically smallest optimal assignment.
///
/// Rows are fixed one at a time to the smallest column that still admits an
/// optimal completion; "optimal" allows a relative slack of `tol`.
pub fn lexicographic_optimal(cost: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let n = cost.len();
    let best = assignment_cost(cost, &hungarian(cost));
    let slack = tol * best.abs().max(1.0);
    let mut perm = Vec::with_capacity(n);
    let mut free_cols: Vec<usize> = (0..n).collect();
    let mut fixed_cost = 0.0;
    for row in 0..n {
        let rest_rows: Vec<usize> = (row + 1..n).collect();
        let mut chosen = None;
        for (pos, &col) in free_cols.iter().enumerate() {
            let remaining: Vec<usize> = free_cols.iter().copied().filter(|c| *c != col).collect();
            let sub: Vec<Vec<f64>> = rest_rows
                .iter()
                .map(|&r| remaining.iter().map(|&c| cost[r][c]).collect())
                .collect();
            let sub_best = assignment_cost(&sub, &hungarian(&sub));
            if fixed_cost + cost[row][col] + sub_best <= best + slack {
                chosen = Some((pos, col));
                break;
            }
        }
        let (pos, col) = chosen.expect("an optimal completion always exists");
        fixed_cost += cost[row][col];
        perm.push(col);
        free_cols.remove(pos);
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == cost.len() {
                *best = best.min(acc);
                return;
            }
            for c in 0..cost.len() {
                if !used[c] {
                    used[c] = true;
                    rec(cost, row + 1, used, acc + cost[row][c], best);
                    used[c] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
        best
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = seed::rng(1);
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..n).map(|_| rng.random::<f64>() * 10.0).collect())
                    .collect();
                let p = hungarian(&cost);
                assert!((assignment_cost(&cost, &p) - brute_force(&cost)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let cost = vec![vec![1.0; 3]; 3];
        assert_eq!(lexicographic_optimal(&cost, 1e-12), vec![0, 1, 2]);
        let cost = vec![
            vec![0.0, 5.0, 5.0],
            vec![5.0, 1.0, 1.0],
            vec![5.0, 1.0, 1.0],
        ];
        assert_eq!(lexicographic_optimal(&cost, 1e-12), vec![0, 1, 2]);
        let cost = vec![vec![3.0, 0.0], vec![0.0, 3.0]];
        assert_eq!(lexicographic_optimal(&cost, 1e-12), vec![1, 0]);
    }
}
