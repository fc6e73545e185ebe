//! Independent oracles shared by the integration tests. None of these call
//! into the code under test beyond building inputs.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sabs_core::discrete::{ContingencyCounts, CountTable};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG on `n` nodes: edges only go from lower to higher index in a
/// random permutation, each present with probability `p`.
pub fn random_dag(r: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, r.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    edges
}

/// d-separation by listing every simple path in the skeleton and checking
/// the blocking rules on each.
pub fn brute_force_dsep(
    n: usize,
    edges: &[(usize, usize)],
    a: &[usize],
    b: &[usize],
    z: &[usize],
) -> bool {
    let has = |p: usize, c: usize| edges.contains(&(p, c));
    let mut desc = vec![vec![false; n]; n];
    for (v, row) in desc.iter_mut().enumerate() {
        row[v] = true;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &(p, c) in edges {
                if p == u && !row[c] {
                    row[c] = true;
                    stack.push(c);
                }
            }
        }
    }
    let collider_open = |v: usize| z.iter().any(|&w| desc[v][w]);
    let blocked = |path: &[usize]| {
        path.windows(3).any(|w| {
            let (u, v, t) = (w[0], w[1], w[2]);
            if has(u, v) && has(t, v) {
                !collider_open(v)
            } else {
                z.contains(&v)
            }
        })
    };
    fn walk(
        n: usize,
        path: &mut Vec<usize>,
        b: &[usize],
        adjacent: &dyn Fn(usize, usize) -> bool,
        on_path: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if path.len() > 1 && b.contains(&last) {
            return on_path(path);
        }
        for v in 0..n {
            if !path.contains(&v) && adjacent(last, v) {
                path.push(v);
                let found = walk(n, path, b, adjacent, on_path);
                path.pop();
                if found {
                    return true;
                }
            }
        }
        false
    }
    let adjacent = |u: usize, v: usize| has(u, v) || has(v, u);
    for &s in a {
        let mut path = vec![s];
        let mut open = |p: &[usize]| !blocked(p);
        if walk(n, &mut path, b, &adjacent, &mut open) {
            return false;
        }
    }
    true
}

/// `ln P(D_e | ·)` as the sum of one-step-ahead Dirichlet predictive
/// probabilities, feeding experimental records one at a time (in a shuffled
/// order) on top of the observational counts when `use_obs`.
pub fn prequential_log_ml(c: &ContingencyCounts, use_obs: bool, r: &mut ChaCha8Rng) -> f64 {
    let (q, k) = (c.q(), c.r());
    let mut records: Vec<(usize, usize)> = Vec::new();
    for j in 0..q {
        for y in 0..k {
            for _ in 0..c.exp.get(j, y) {
                records.push((j, y));
            }
        }
    }
    for i in (1..records.len()).rev() {
        records.swap(i, r.random_range(0..=i));
    }
    let mut counts: Vec<f64> = (0..q * k)
        .map(|i| c.alpha[i] + if use_obs { c.obs.counts[i] as f64 } else { 0.0 })
        .collect();
    let mut total = 0.0;
    for (j, y) in records {
        let row = &counts[j * k..(j + 1) * k];
        total += (row[y] / row.iter().sum::<f64>()).ln();
        counts[j * k + y] += 1.0;
    }
    total
}

pub fn random_table(r: &mut ChaCha8Rng, q: usize, k: usize, max: u64) -> CountTable {
    CountTable {
        q,
        r: k,
        counts: (0..q * k).map(|_| r.random_range(0..=max)).collect(),
    }
}

/// Posterior mean and SD of the intercept of an intercept-only logistic
/// model with a Cauchy(0, `scale`) prior, by trapezoidal quadrature on a
/// fine grid around the MLE.
pub fn intercept_posterior_by_quadrature(n1: usize, n0: usize, scale: f64) -> (f64, f64) {
    let (a, b) = (n1 as f64, n0 as f64);
    let log_post = |t: f64| {
        let lp1 = -(-t).exp().ln_1p();
        let lp0 = -t.exp().ln_1p();
        a * lp1 + b * lp0 - (t / scale).powi(2).ln_1p()
    };
    let mle = ((a + 0.5) / (b + 0.5)).ln();
    let (lo, hi, m) = (mle - 3.0, mle + 3.0, 60_000);
    let h = (hi - lo) / m as f64;
    let grid: Vec<f64> = (0..=m).map(|i| lo + i as f64 * h).collect();
    let peak = grid
        .iter()
        .map(|&t| log_post(t))
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let e = (log_post(t) - peak).exp();
            if i == 0 || i == m {
                e / 2.0
            } else {
                e
            }
        })
        .collect();
    let z: f64 = w.iter().sum();
    let mean = grid.iter().zip(&w).map(|(t, w)| t * w).sum::<f64>() / z;
    let var = grid
        .iter()
        .zip(&w)
        .map(|(t, w)| (t - mean).powi(2) * w)
        .sum::<f64>()
        / z;
    (mean, var.sqrt())
}
