//! Graph-similarity and correlation-structure persistence signals.
//!
//! The edge survival ratio between two filtered graphs is the fraction of
//! edges they share. The persistence signal at window `a` averages the
//! survival against the `L` preceding windows with exponentially increasing
//! weights (scale `L/3`, normalized to sum to one), so high values mean the
//! network structure is changing slowly. The metacorrelation offers a
//! filter-free baseline: plain Pearson correlation between the off-diagonal
//! entries of two correlation matrices, averaged the same way.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::netfilter::FilteredGraph;

/// Which pairwise similarity a matrix or persistence series was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityMeasure {
    EdgeSurvival,
    Metacorrelation,
}

impl std::fmt::Display for SimilarityMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimilarityMeasure::EdgeSurvival => write!(f, "edge-survival"),
            SimilarityMeasure::Metacorrelation => write!(f, "metacorrelation"),
        }
    }
}

impl std::str::FromStr for SimilarityMeasure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-survival" | "es" => Ok(SimilarityMeasure::EdgeSurvival),
            "metacorrelation" | "meta" => Ok(SimilarityMeasure::Metacorrelation),
            other => Err(Error::Config(format!("unknown measure `{other}`"))),
        }
    }
}

/// Fraction of shared edges between two graphs of the same kind and size.
pub fn edge_survival(ga: &FilteredGraph, gb: &FilteredGraph) -> Result<f64> {
    if ga.n_nodes() != gb.n_nodes() {
        return Err(Error::Incompatible(format!(
            "node counts differ: {} vs {}",
            ga.n_nodes(),
            gb.n_nodes()
        )));
    }
    if ga.kind() != gb.kind() || ga.n_edges() != gb.n_edges() {
        return Err(Error::Incompatible(format!(
            "graphs differ in kind or edge count: {} {} vs {} {}",
            ga.kind(),
            ga.n_edges(),
            gb.kind(),
            gb.n_edges()
        )));
    }
    if ga.n_edges() == 0 {
        return Err(Error::Incompatible("graphs have no edges".into()));
    }
    // both edge lists are sorted: two-pointer intersection
    let (ea, eb) = (ga.edges(), gb.edges());
    let mut shared = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < ea.len() && j < eb.len() {
        match ea[i].cmp(&eb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(shared as f64 / ga.n_edges() as f64)
}

/// Lookback weights for the persistence average over windows `a-L .. a-1`,
/// oldest first: positive, increasing toward the most recent predecessor,
/// summing to one, with ratio `exp(3(L-1)/L)` between newest and oldest.
pub fn persistence_weights(lookback: usize) -> Vec<f64> {
    assert!(lookback >= 1, "lookback must be at least 1");
    let l = lookback as f64;
    // offset b - a - 1 for b = a-L+j runs from -L-1 (oldest) to -2 (newest);
    // the constant factor cancels in the normalization
    let mut w: Vec<f64> = (0..lookback)
        .map(|j| ((j as f64 - l - 1.0) * 3.0 / l).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Persistence signal at window `a`: the weighted average edge survival
/// against the `L` preceding graphs.
pub fn correlation_persistence(graphs: &[FilteredGraph], a: usize, lookback: usize) -> Result<f64> {
    if a < lookback {
        return Err(Error::InsufficientHistory {
            window: a,
            available: a,
            required: lookback,
        });
    }
    let w = persistence_weights(lookback);
    let mut acc = 0.0;
    for (j, wj) in w.iter().enumerate() {
        let b = a - lookback + j;
        acc += wj * edge_survival(&graphs[a], &graphs[b])?;
    }
    Ok(acc)
}

/// A matrix's strict upper triangle flattened for the metacorrelation,
/// with its mean and population standard deviation precomputed.
#[derive(Debug, Clone)]
pub struct OffDiagonal {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl OffDiagonal {
    pub fn from_matrix(rho: ArrayView2<f64>) -> Self {
        let n = rho.nrows();
        let mut values = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                values.push(rho[[i, j]]);
            }
        }
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / m;
        OffDiagonal {
            values,
            mean,
            sd: var.sqrt(),
        }
    }

    /// Pearson correlation between two flattened triangles.
    pub fn correlate(&self, other: &OffDiagonal) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::Incompatible(format!(
                "off-diagonal lengths differ: {} vs {}",
                self.values.len(),
                other.values.len()
            )));
        }
        if self.sd == 0.0 || other.sd == 0.0 {
            return Err(Error::Degenerate(
                "off-diagonal entries have zero variance".into(),
            ));
        }
        let m = self.values.len() as f64;
        let mut cross = 0.0;
        for (x, y) in self.values.iter().zip(&other.values) {
            cross += (x - self.mean) * (y - other.mean);
        }
        Ok((cross / m / (self.sd * other.sd)).clamp(-1.0, 1.0))
    }
}

/// Pearson correlation between the strict upper triangles of two
/// correlation matrices. The numerator is centered, matching the centered
/// variances in the denominator.
pub fn metacorrelation(rho_a: ArrayView2<f64>, rho_b: ArrayView2<f64>) -> Result<f64> {
    if rho_a.nrows() != rho_b.nrows() || rho_a.ncols() != rho_b.ncols() {
        return Err(Error::Incompatible(format!(
            "matrix shapes differ: {}x{} vs {}x{}",
            rho_a.nrows(),
            rho_a.ncols(),
            rho_b.nrows(),
            rho_b.ncols()
        )));
    }
    OffDiagonal::from_matrix(rho_a).correlate(&OffDiagonal::from_matrix(rho_b))
}

/// Persistence of the raw correlation structure at window `a`: weighted
/// average metacorrelation against the `L` preceding matrices.
pub fn metacorrelation_persistence(
    rhos: &[Array2<f64>],
    a: usize,
    lookback: usize,
) -> Result<f64> {
    if a < lookback {
        return Err(Error::InsufficientHistory {
            window: a,
            available: a,
            required: lookback,
        });
    }
    let w = persistence_weights(lookback);
    let target = OffDiagonal::from_matrix(rhos[a].view());
    let mut acc = 0.0;
    for (j, wj) in w.iter().enumerate() {
        let b = a - lookback + j;
        acc += wj * target.correlate(&OffDiagonal::from_matrix(rhos[b].view()))?;
    }
    Ok(acc)
}

/// Full pairwise similarity matrix over a window sequence, for inspection
/// and block-structure diagnostics. Symmetric with unit diagonal.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub values: Array2<f64>,
    pub measure: SimilarityMeasure,
}

pub fn similarity_matrix_graphs(graphs: &[FilteredGraph]) -> Result<SimilarityMatrix> {
    let n = graphs.len();
    if n < 2 {
        return Err(Error::Incompatible("need at least 2 graphs".into()));
    }
    let mut values = Array2::zeros((n, n));
    for a in 0..n {
        values[[a, a]] = 1.0;
        for b in a + 1..n {
            let s = edge_survival(&graphs[a], &graphs[b])?;
            values[[a, b]] = s;
            values[[b, a]] = s;
        }
    }
    Ok(SimilarityMatrix {
        values,
        measure: SimilarityMeasure::EdgeSurvival,
    })
}

pub fn similarity_matrix_correlations(rhos: &[Array2<f64>]) -> Result<SimilarityMatrix> {
    let n = rhos.len();
    if n < 2 {
        return Err(Error::Incompatible("need at least 2 matrices".into()));
    }
    let tri: Vec<OffDiagonal> = rhos
        .iter()
        .map(|r| OffDiagonal::from_matrix(r.view()))
        .collect();
    let mut values = Array2::zeros((n, n));
    for a in 0..n {
        values[[a, a]] = 1.0;
        for b in a + 1..n {
            let s = tri[a].correlate(&tri[b])?;
            values[[a, b]] = s;
            values[[b, a]] = s;
        }
    }
    Ok(SimilarityMatrix {
        values,
        measure: SimilarityMeasure::Metacorrelation,
    })
}
