#![allow(dead_code)]

use dinet::model::{
    build_omega, sample_column_degrees, validate_onm_params, ColumnLabels, ConnectivityMatrix,
    Degrees, PopulationMatrix, RowMembership,
};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A parameter set together with its population matrix.
pub struct Instance {
    pub pi_r: RowMembership,
    pub labels: ColumnLabels,
    pub p: ConnectivityMatrix,
    pub omega: PopulationMatrix,
}

pub fn random_membership(rng: &mut ChaCha8Rng, n: usize, k: usize) -> RowMembership {
    let n_pure = rng.random_range(1..=3).min(n / k);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for c in 0..k {
        for _ in 0..n_pure {
            let mut r = vec![0.0; k];
            r[c] = 1.0;
            rows.push(r);
        }
    }
    while rows.len() < n {
        let w: Vec<f64> = (0..k)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(0.05..1.0)
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s == 0.0 {
            continue;
        }
        rows.push(w.iter().map(|x| x / s).collect());
    }
    rows.shuffle(rng);
    RowMembership::from_rows(&rows).unwrap()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ColumnLabels {
    let mut l: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.random_range(0..k) })
        .collect();
    l.shuffle(rng);
    ColumnLabels::new(l, k).unwrap()
}

/// `P` with entries in `[lo, 1]`, redrawn until it is comfortably full rank.
pub fn random_connectivity(rng: &mut ChaCha8Rng, k_r: usize, k_c: usize, lo: f64) -> DMatrix<f64> {
    loop {
        let p = DMatrix::from_fn(k_r, k_c, |_, _| rng.random_range(lo..=1.0));
        let s = p.singular_values();
        let (mx, mn) = (s.max(), s.min());
        if mn > 1e-3 * mx {
            return p;
        }
    }
}

/// A random ONM (or ODCNM when `z_c` is given) instance satisfying (I1)-(I2).
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    k_r: usize,
    k_c: usize,
    n_r: usize,
    n_c: usize,
    z_c: Option<f64>,
) -> Instance {
    let pi_r = random_membership(rng, n_r, k_r);
    let labels = random_labels(rng, n_c, k_c);
    let p =
        ConnectivityMatrix::from_probabilities(random_connectivity(rng, k_r, k_c, 0.05)).unwrap();
    let report = validate_onm_params(&pi_r, &labels, &p).unwrap();
    assert!(report.all_passed(), "generator produced invalid parameters");
    let degrees = match z_c {
        None => Degrees::None,
        Some(z) => Degrees::Column(sample_column_degrees(n_c, z, rng.random()).unwrap()),
    };
    let omega = build_omega(&pi_r, &labels, &p, &degrees).unwrap();
    Instance {
        pi_r,
        labels,
        p,
        omega,
    }
}

/// Every permutation of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Minimum over column permutations of the largest row-wise L1 distance.
pub fn max_row_l1_error(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let k = truth.ncols();
    permutations(k)
        .iter()
        .map(|perm| {
            (0..truth.nrows())
                .map(|i| {
                    (0..k)
                        .map(|c| (est[(i, perm[c])] - truth[(i, c)]).abs())
                        .sum::<f64>()
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// True when two labelings agree up to a relabeling.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    use std::collections::HashMap;
    let (mut ab, mut ba) = (HashMap::new(), HashMap::new());
    a.iter()
        .zip(b)
        .all(|(x, y)| *ab.entry(*x).or_insert(*y) == *y && *ba.entry(*y).or_insert(*x) == *x)
}

/// Brute-force MHamm: `min_perm Σ_i Σ_k |Π̂(i,perm k) − Π(i,k)| / n`.
pub fn brute_mhamm(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let k = truth.ncols();
    permutations(k)
        .iter()
        .map(|perm| {
            let mut s = 0.0;
            for c in 0..k {
                for i in 0..truth.nrows() {
                    s += (est[(i, perm[c])] - truth[(i, c)]).abs();
                }
            }
            s
        })
        .fold(f64::INFINITY, f64::min)
        / truth.nrows() as f64
}

/// Brute-force Hamm over one-hot encodings.
pub fn brute_hamm(est: &[usize], truth: &[usize], k: usize) -> f64 {
    let best = permutations(k)
        .iter()
        .map(|perm| {
            truth
                .iter()
                .zip(est)
                .filter(|(t, e)| perm[**t] != **e)
                .count()
        })
        .min()
        .unwrap();
    2.0 * best as f64 / truth.len() as f64
}

/// Optimal k-means cost by enumerating every labeling with all `k` clusters
/// used.
pub fn brute_kmeans_cost(x: &DMatrix<f64>, k: usize) -> f64 {
    let (n, d) = x.shape();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..d {
                sums[labels[i]][j] += x[(i, j)];
            }
        }
        if counts.iter().all(|c| *c > 0) {
            let mut cost = 0.0;
            for i in 0..n {
                let c = labels[i];
                for j in 0..d {
                    cost += (x[(i, j)] - sums[c][j] / counts[c] as f64).powi(2);
                }
            }
            best = best.min(cost);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// Singular values from the eigenvalues of the smaller Gram matrix.
pub fn gram_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let g = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    let mut ev: Vec<f64> = g
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Count of adjacent steps that break a monotone trend, and the largest
/// such step.
pub fn trend_violations(values: &[f64], increasing: bool) -> (usize, f64) {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for w in values.windows(2) {
        let step = if increasing { w[0] - w[1] } else { w[1] - w[0] };
        if step > 0.0 {
            count += 1;
            worst = worst.max(step);
        }
    }
    (count, worst)
}

/// Monotone up to a single adjacent violation smaller than `allowance`.
pub fn trend_holds(values: &[f64], increasing: bool, allowance: f64) -> bool {
    let (count, worst) = trend_violations(values, increasing);
    count == 0 || (count == 1 && worst < allowance)
}
