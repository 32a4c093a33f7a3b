//! Shared test oracles, deliberately independent of the library's
//! implementation paths: brute-force planarity by Kuratowski-subdivision
//! search, a greedy PMFG built on that oracle, plain two-pass statistics,
//! and a grid-search logistic MLE.

#![allow(dead_code)]

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Planarity by exhaustive search for a K5 or K3,3 subdivision. Exact for
/// any graph, feasible for n <= 10 or so.
pub fn is_planar_bruteforce(n: usize, edges: &[(u32, u32)]) -> bool {
    let mut adj = vec![vec![false; n]; n];
    let mut degree = vec![0usize; n];
    for &(u, v) in edges {
        let (u, v) = (u as usize, v as usize);
        adj[u][v] = true;
        adj[v][u] = true;
        degree[u] += 1;
        degree[v] += 1;
    }
    !(has_k5_subdivision(n, &adj, &degree) || has_k33_subdivision(n, &adj, &degree))
}

fn has_k5_subdivision(n: usize, adj: &[Vec<bool>], degree: &[usize]) -> bool {
    let candidates: Vec<usize> = (0..n).filter(|&v| degree[v] >= 4).collect();
    let mut chosen = Vec::with_capacity(5);
    choose_branches(&candidates, 5, 0, &mut chosen, &mut |branch| {
        let mut pairs = Vec::with_capacity(10);
        for i in 0..5 {
            for j in i + 1..5 {
                pairs.push((branch[i], branch[j]));
            }
        }
        let mut avail: Vec<bool> = (0..n).map(|v| !branch.contains(&v)).collect();
        connect_all(&pairs, 0, adj, &mut avail)
    })
}

fn has_k33_subdivision(n: usize, adj: &[Vec<bool>], degree: &[usize]) -> bool {
    let candidates: Vec<usize> = (0..n).filter(|&v| degree[v] >= 3).collect();
    let mut chosen = Vec::with_capacity(6);
    choose_branches(&candidates, 6, 0, &mut chosen, &mut |branch| {
        // Partition the six branch vertices into two sides of three; fixing
        // branch[0] on the first side halves the symmetric duplicates.
        for a in 1..6 {
            for b in a + 1..6 {
                let side_a = [branch[0], branch[a], branch[b]];
                let side_b: Vec<usize> = (1..6)
                    .filter(|&k| k != a && k != b)
                    .map(|k| branch[k])
                    .collect();
                let mut pairs = Vec::with_capacity(9);
                for &x in &side_a {
                    for &y in &side_b {
                        pairs.push((x, y));
                    }
                }
                let mut avail: Vec<bool> = (0..n).map(|v| !branch.contains(&v)).collect();
                if connect_all(&pairs, 0, adj, &mut avail) {
                    return true;
                }
            }
        }
        false
    })
}

fn choose_branches(
    candidates: &[usize],
    want: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    check: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if chosen.len() == want {
        return check(chosen);
    }
    if candidates.len() - from < want - chosen.len() {
        return false;
    }
    for i in from..candidates.len() {
        chosen.push(candidates[i]);
        if choose_branches(candidates, want, i + 1, chosen, check) {
            chosen.pop();
            return true;
        }
        chosen.pop();
    }
    false
}

/// Tries to realize every required pair as a direct edge or a path through
/// unused non-branch vertices, pairwise internally disjoint.
fn connect_all(pairs: &[(usize, usize)], k: usize, adj: &[Vec<bool>], avail: &mut [bool]) -> bool {
    if k == pairs.len() {
        return true;
    }
    let (a, b) = pairs[k];
    if adj[a][b] && connect_all(pairs, k + 1, adj, avail) {
        return true;
    }
    grow_path(a, b, pairs, k, adj, avail)
}

fn grow_path(
    cur: usize,
    target: usize,
    pairs: &[(usize, usize)],
    k: usize,
    adj: &[Vec<bool>],
    avail: &mut [bool],
) -> bool {
    for f in 0..avail.len() {
        if avail[f] && adj[cur][f] {
            avail[f] = false;
            if adj[f][target] && connect_all(pairs, k + 1, adj, avail) {
                avail[f] = true;
                return true;
            }
            if grow_path(f, target, pairs, k, adj, avail) {
                avail[f] = true;
                return true;
            }
            avail[f] = true;
        }
    }
    false
}

/// Greedy PMFG identical in ranking and tie-break to the library builder
/// but backed by the brute-force planarity oracle above.
pub fn greedy_pmfg_bruteforce(rho: &Array2<f64>) -> Vec<(u32, u32)> {
    let n = rho.nrows();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i as u32, j as u32, rho[[i, j]]));
        }
    }
    pairs.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
    });
    let target = 3 * n - 6;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for (i, j, _) in pairs {
        if edges.len() == target {
            break;
        }
        edges.push((i, j));
        if !is_planar_bruteforce(n, &edges) {
            edges.pop();
        }
    }
    edges.sort();
    edges
}

/// A random symmetric matrix with unit diagonal and entries in (-1, 1).
pub fn random_correlation_like(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = 1.0;
        for j in i + 1..n {
            let w = 2.0 * rng.gen::<f64>() - 1.0;
            m[[i, j]] = w;
            m[[j, i]] = w;
        }
    }
    m
}

/// A random Erdos-Renyi-style simple graph.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in i + 1..n as u32 {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Plain two-pass Pearson correlation.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..x.len() {
        num += (x[i] - mx) * (y[i] - my);
        dx += (x[i] - mx) * (x[i] - mx);
        dy += (y[i] - my) * (y[i] - my);
    }
    num / (dx * dy).sqrt()
}

/// Weighted Pearson between two columns of a window, double loop.
pub fn weighted_pearson_oracle(window: &Array2<f64>, weights: &[f64], i: usize, j: usize) -> f64 {
    let mean = |c: usize| -> f64 {
        weights
            .iter()
            .enumerate()
            .map(|(t, &w)| w * window[[t, c]])
            .sum()
    };
    let (mi, mj) = (mean(i), mean(j));
    let mut cij = 0.0;
    let mut cii = 0.0;
    let mut cjj = 0.0;
    for (t, &w) in weights.iter().enumerate() {
        let (a, b) = (window[[t, i]] - mi, window[[t, j]] - mj);
        cij += w * a * b;
        cii += w * a * a;
        cjj += w * b * b;
    }
    cij / (cii * cjj).sqrt()
}

/// Weighted standard deviation, double pass.
pub fn weighted_std_oracle(x: &[f64], weights: &[f64]) -> f64 {
    let mu: f64 = weights.iter().zip(x).map(|(&w, &v)| w * v).sum();
    weights
        .iter()
        .zip(x)
        .map(|(&w, &v)| w * (v - mu) * (v - mu))
        .sum::<f64>()
        .sqrt()
}

/// Pearson of the upper triangles (excluding the diagonal) of two square
/// matrices, flattened into plain vectors first.
pub fn metacorrelation_oracle(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut va = Vec::new();
    let mut vb = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            va.push(a[[i, j]]);
            vb.push(b[[i, j]]);
        }
    }
    pearson_oracle(&va, &vb)
}

/// Bernoulli log-likelihood of a single-predictor logistic model.
fn oracle_log_likelihood(x: &[f64], y: &[bool], b0: f64, b1: f64) -> f64 {
    let mut ll = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let t = b0 + b1 * xi;
        // log S(t) = -softplus(-t), log(1 - S(t)) = -softplus(t)
        let softplus = |u: f64| {
            if u > 30.0 {
                u
            } else if u < -30.0 {
                u.exp()
            } else {
                u.exp().ln_1p()
            }
        };
        ll -= if yi { softplus(-t) } else { softplus(t) };
    }
    ll
}

/// Dense grid-search maximum likelihood for logistic regression with
/// iterative refinement around the best cell.
pub fn logistic_grid_mle(x: &[f64], y: &[bool]) -> (f64, f64, f64) {
    let mut c0 = 0.0;
    let mut c1 = 0.0;
    let mut half0 = 25.0;
    let mut half1 = 50.0;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for _ in 0..8 {
        let steps = 40;
        for i in 0..=steps {
            for j in 0..=steps {
                let b0 = c0 - half0 + 2.0 * half0 * i as f64 / steps as f64;
                let b1 = c1 - half1 + 2.0 * half1 * j as f64 / steps as f64;
                let ll = oracle_log_likelihood(x, y, b0, b1);
                if ll > best.2 {
                    best = (b0, b1, ll);
                }
            }
        }
        c0 = best.0;
        c1 = best.1;
        // shrink to two grid spacings around the best cell
        half0 = (half0 * 4.0 / steps as f64).max(1e-7);
        half1 = (half1 * 4.0 / steps as f64).max(1e-7);
    }
    best
}
