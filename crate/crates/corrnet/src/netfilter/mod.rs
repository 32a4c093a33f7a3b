//! Correlation-network filtering: PMFG and MST construction.
//!
//! Both filters rank all off-diagonal pairs by correlation, descending, and
//! add edges greedily: the PMFG accepts an edge iff the graph stays planar,
//! stopping at `3N-6` edges; the MST accepts an edge iff it joins two
//! components, stopping at `N-1`. Signed correlations are ranked as-is (no
//! absolute value), so both constructions depend only on the ranking of the
//! correlations, and the MST is always contained in the PMFG for distinct
//! weights. Ties are broken by ascending `(i, j)` for determinism.

mod planarity;

pub use planarity::{is_planar as lr_is_planar, PlanarityChecker};

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Which filtered network a graph is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Pmfg,
    Mst,
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphKind::Pmfg => write!(f, "pmfg"),
            GraphKind::Mst => write!(f, "mst"),
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pmfg" => Ok(GraphKind::Pmfg),
            "mst" => Ok(GraphKind::Mst),
            other => Err(Error::Config(format!("unknown filter kind `{other}`"))),
        }
    }
}

/// A filtered correlation network: a simple edge set over asset indices
/// with the retained correlation per edge. Edges are kept sorted by
/// ascending `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredGraph {
    n_nodes: usize,
    kind: GraphKind,
    edges: Vec<(u32, u32)>,
    weights: Vec<f64>,
}

impl FilteredGraph {
    /// Builds a graph from raw parts. Edges are normalized to `i < j` and
    /// sorted; duplicates and self-loops are rejected.
    pub fn from_edges(
        n_nodes: usize,
        kind: GraphKind,
        edges: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        let mut pairs: Vec<((u32, u32), f64)> = edges
            .into_iter()
            .map(|(i, j, w)| (if i < j { (i, j) } else { (j, i) }, w))
            .collect();
        pairs.sort_by_key(|&(e, _)| e);
        for pair in pairs.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Incompatible(format!(
                    "duplicate edge ({}, {})",
                    pair[0].0 .0, pair[0].0 .1
                )));
            }
        }
        if let Some(&((i, j), _)) = pairs
            .iter()
            .find(|&&((i, j), _)| i == j || j as usize >= n_nodes)
        {
            return Err(Error::Incompatible(format!(
                "edge ({i}, {j}) invalid for {n_nodes} nodes"
            )));
        }
        let (edges, weights) = pairs.into_iter().map(|(e, w)| (e, w)).unzip();
        Ok(FilteredGraph {
            n_nodes,
            kind,
            edges,
            weights,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// Edges sorted ascending by `(i, j)`, `i < j`.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Retained correlations, aligned with [`edges`](Self::edges).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        if self.n_nodes == 0 {
            return true;
        }
        let mut uf = UnionFind::new(self.n_nodes);
        for &(i, j) in &self.edges {
            uf.union(i as usize, j as usize);
        }
        let root = uf.find(0);
        (1..self.n_nodes).all(|v| uf.find(v) == root)
    }
}

/// Ranks all `i < j` pairs by correlation descending, ties by ascending
/// `(i, j)`. Shared by both filters so containment and rank-invariance hold
/// by construction.
fn ranked_pairs(rho: ArrayView2<f64>) -> Result<Vec<(u32, u32, f64)>> {
    let n = rho.nrows();
    if rho.ncols() != n {
        return Err(Error::Incompatible(format!(
            "correlation matrix is {}x{}, expected square",
            n,
            rho.ncols()
        )));
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let w = rho[[i, j]];
            if !w.is_finite() {
                return Err(Error::Degenerate(format!(
                    "correlation ({i}, {j}) is not finite"
                )));
            }
            pairs.push((i as u32, j as u32, w));
        }
    }
    pairs.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
    });
    Ok(pairs)
}

/// Planar maximally filtered graph: greedy edge addition in rank order
/// under an incremental planarity test, stopping at `3N-6` edges.
pub fn build_pmfg(rho: ArrayView2<f64>) -> Result<FilteredGraph> {
    let n = rho.nrows();
    if n < 4 {
        return Err(Error::Dataset(format!(
            "PMFG needs at least 4 nodes, got {n}"
        )));
    }
    let target = 3 * n - 6;
    let mut checker = PlanarityChecker::new();
    let mut uf = UnionFind::new(n);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(target);
    let mut weights: Vec<f64> = Vec::with_capacity(target);
    for (i, j, w) in ranked_pairs(rho)? {
        if edges.len() == target {
            break;
        }
        // An edge joining two planar components keeps the graph planar;
        // only same-component additions need the full test.
        let accept = if uf.union(i as usize, j as usize) {
            true
        } else {
            edges.push((i, j));
            let ok = checker.is_planar(n, &edges);
            edges.pop();
            ok
        };
        if accept {
            edges.push((i, j));
            weights.push(w);
        }
    }
    debug_assert_eq!(edges.len(), target);
    FilteredGraph::from_edges(n, GraphKind::Pmfg, {
        edges
            .iter()
            .zip(&weights)
            .map(|(&(i, j), &w)| (i, j, w))
            .collect::<Vec<_>>()
    })
}

/// Maximum-correlation spanning tree (Kruskal in rank order). Equivalent to
/// the minimum spanning tree of the distance `sqrt(2(1 - rho))`, which is
/// monotone decreasing in the correlation.
pub fn build_mst(rho: ArrayView2<f64>) -> Result<FilteredGraph> {
    let n = rho.nrows();
    if n < 2 {
        return Err(Error::Dataset(format!("MST needs at least 2 nodes, got {n}")));
    }
    let mut uf = UnionFind::new(n);
    let mut picked = Vec::with_capacity(n - 1);
    for (i, j, w) in ranked_pairs(rho)? {
        if picked.len() == n - 1 {
            break;
        }
        if uf.union(i as usize, j as usize) {
            picked.push((i, j, w));
        }
    }
    FilteredGraph::from_edges(n, GraphKind::Mst, picked)
}

/// Planarity of an arbitrary simple graph given as an edge set.
pub fn is_planar(n_nodes: usize, edges: &[(u32, u32)]) -> bool {
    lr_is_planar(n_nodes, edges)
}

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            self.parent[x] = self.parent[self.parent[x] as usize];
            x = self.parent[x] as usize;
        }
        x
    }

    /// Merges the two sets; returns false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}


#[cfg(test)]
mod tests {
    use super::tests_support::random_correlation_like;
    use super::*;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pmfg_on_four_nodes_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_correlation_like(&mut rng, 4);
        let g = build_pmfg(rho.view()).unwrap();
        assert_eq!(g.n_edges(), 6);
        assert!(g.is_connected());
    }

    #[test]
    fn pmfg_on_five_nodes_drops_exactly_the_weakest_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let rho = random_correlation_like(&mut rng, 5);
            let g = build_pmfg(rho.view()).unwrap();
            assert_eq!(g.n_edges(), 9);
            let mut weakest = (0u32, 0u32);
            let mut wmin = f64::INFINITY;
            for i in 0..5u32 {
                for j in i + 1..5u32 {
                    if rho[[i as usize, j as usize]] < wmin {
                        wmin = rho[[i as usize, j as usize]];
                        weakest = (i, j);
                    }
                }
            }
            assert!(!g.edges().contains(&weakest));
        }
    }

    #[test]
    fn pmfg_rejects_small_matrices() {
        let rho = Array2::eye(3);
        assert!(matches!(
            build_pmfg(rho.view()),
            Err(Error::Dataset(_))
        ));
    }

    #[test]
    fn pmfg_edge_count_and_planarity_at_larger_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [10, 20, 40] {
            let rho = random_correlation_like(&mut rng, n);
            let g = build_pmfg(rho.view()).unwrap();
            assert_eq!(g.n_edges(), 3 * n - 6);
            assert!(g.is_connected());
            assert!(is_planar(n, g.edges()));
        }
    }

    #[test]
    fn mst_on_three_nodes_keeps_two_strongest_edges() {
        let mut rho = Array2::eye(3);
        let set = |m: &mut Array2<f64>, i: usize, j: usize, w: f64| {
            m[[i, j]] = w;
            m[[j, i]] = w;
        };
        set(&mut rho, 0, 1, 0.9);
        set(&mut rho, 0, 2, 0.5);
        set(&mut rho, 1, 2, 0.1);
        let g = build_mst(rho.view()).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn mst_with_equal_weights_is_lexicographically_first() {
        let n = 5;
        let mut rho = Array2::from_elem((n, n), 0.5);
        for i in 0..n {
            rho[[i, i]] = 1.0;
        }
        let g = build_mst(rho.view()).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (0, 3), (0, 4)]);
    }

    #[test]
    fn mst_matches_exhaustive_search_over_pruefer_trees() {
        // Every labeled tree on n nodes corresponds to a Pruefer sequence,
        // so enumerating sequences searches all spanning trees.
        fn tree_from_pruefer(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
            let mut degree = vec![1usize; n];
            for &s in seq {
                degree[s] += 1;
            }
            let mut edges = Vec::with_capacity(n - 1);
            let mut seq = seq.to_vec();
            for _ in 0..n - 2 {
                let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
                let s = seq.remove(0);
                edges.push((leaf.min(s), leaf.max(s)));
                degree[leaf] -= 1;
                degree[s] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
            edges.push((rest[0], rest[1]));
            edges
        }

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [4usize, 5, 6] {
            let rho = random_correlation_like(&mut rng, n);
            let g = build_mst(rho.view()).unwrap();
            let got: f64 = g.weights().iter().sum();

            let mut best = f64::NEG_INFINITY;
            let count = n.pow((n - 2) as u32);
            for code in 0..count {
                let mut seq = Vec::with_capacity(n - 2);
                let mut c = code;
                for _ in 0..n - 2 {
                    seq.push(c % n);
                    c /= n;
                }
                let total: f64 = tree_from_pruefer(&seq, n)
                    .iter()
                    .map(|&(i, j)| rho[[i, j]])
                    .sum();
                best = best.max(total);
            }
            assert!(
                (got - best).abs() < 1e-12,
                "n={n}: kruskal {got} vs exhaustive {best}"
            );
        }
    }

    #[test]
    fn mst_is_contained_in_pmfg() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [6usize, 10, 20, 30] {
            let rho = random_correlation_like(&mut rng, n);
            let pmfg = build_pmfg(rho.view()).unwrap();
            let mst = build_mst(rho.view()).unwrap();
            for e in mst.edges() {
                assert!(
                    pmfg.edges().binary_search(e).is_ok(),
                    "n={n}: MST edge {e:?} missing from PMFG"
                );
            }
        }
    }

    #[test]
    fn pmfg_is_invariant_under_monotone_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let rho = random_correlation_like(&mut rng, 12);
            let cubed = rho.mapv(|x| x.powi(3));
            let a = build_pmfg(rho.view()).unwrap();
            let b = build_pmfg(cubed.view()).unwrap();
            assert_eq!(a.edges(), b.edges());
        }
    }

    #[test]
    fn builders_are_deterministic_with_ties() {
        let mut rho = Array2::from_elem((8, 8), 0.3);
        for i in 0..8 {
            rho[[i, i]] = 1.0;
        }
        // a few distinct entries on top of a sea of ties
        rho[[0, 3]] = 0.9;
        rho[[3, 0]] = 0.9;
        rho[[2, 5]] = -0.4;
        rho[[5, 2]] = -0.4;
        let a = build_pmfg(rho.view()).unwrap();
        let b = build_pmfg(rho.view()).unwrap();
        assert_eq!(a.edges(), b.edges());
        let ta = build_mst(rho.view()).unwrap();
        let tb = build_mst(rho.view()).unwrap();
        assert_eq!(ta.edges(), tb.edges());
    }

    #[test]
    fn from_edges_rejects_duplicates_and_loops() {
        assert!(FilteredGraph::from_edges(4, GraphKind::Mst, vec![(0, 1, 0.5), (1, 0, 0.2)])
            .is_err());
        assert!(FilteredGraph::from_edges(4, GraphKind::Mst, vec![(2, 2, 0.5)]).is_err());
        assert!(FilteredGraph::from_edges(4, GraphKind::Mst, vec![(0, 7, 0.5)]).is_err());
    }

    #[test]
    fn negative_correlations_rank_below_positive_ones() {
        // With N=5 the single rejected pair must be the lowest-ranked one,
        // even when it is the most negative rather than smallest magnitude.
        let mut rho = Array2::eye(5);
        let mut w = 0.8;
        for i in 0..5 {
            for j in i + 1..5 {
                rho[[i, j]] = w;
                rho[[j, i]] = w;
                w -= 0.17; // descends into negative territory
            }
        }
        let g = build_pmfg(rho.view()).unwrap();
        let mut weakest = (0, 0);
        let mut wmin = f64::INFINITY;
        for i in 0..5 {
            for j in i + 1..5 {
                if rho[[i, j]] < wmin {
                    wmin = rho[[i, j]];
                    weakest = (i as u32, j as u32);
                }
            }
        }
        assert!(!g.edges().contains(&weakest));
        assert!(g.weights().iter().any(|&x| x < 0.0));
    }
}
