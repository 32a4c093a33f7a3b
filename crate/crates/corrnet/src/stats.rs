//! Interplay statistics: Pearson correlation of the persistence signal with
//! the volatility ratio, circular block-bootstrap confidence intervals with
//! automatic block-length selection, and the parameter-grid report.
//!
//! Rolling windows overlap heavily, so the signal series are strongly
//! autocorrelated and i.i.d.-based tests on the Pearson coefficient do not
//! apply. Blocks of the paired series are resampled jointly (wrapping
//! around the end) to preserve both the serial and the cross dependence;
//! percentile intervals come from the resampled correlation distribution.
//! The block length is chosen by the flat-top lag-window rule adaptive to
//! the correlogram, and can be overridden in [`BootstrapConfig`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ReturnTable;
use crate::netfilter::GraphKind;
use crate::persistence::SimilarityMeasure;
use crate::volratio::{compute_windowed_networks, signal_series_from_networks, NetworkConfig};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Identifier of the resampling RNG, recorded in every result.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Plain Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Incompatible(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Incompatible(format!(
            "need at least 3 observations, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        dx += (xi - mx) * (xi - mx);
        dy += (yi - my) * (yi - my);
    }
    if dx == 0.0 || dy == 0.0 {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    Ok((num / (dx * dy).sqrt()).clamp(-1.0, 1.0))
}

/// Flat-top lag-window kernel: 1 up to half support, linear taper to 1.
fn flat_top(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 {
        1.0
    } else if a <= 1.0 {
        2.0 * (1.0 - a)
    } else {
        0.0
    }
}

/// Automatic block length for the circular block bootstrap, adaptive to the
/// autocorrelation strength of the series via the correlogram: the
/// significant-lag horizon sets the kernel bandwidth, and the block length
/// grows as `n^(1/3)` scaled by the kernel-weighted autocovariance mass.
pub fn optimal_block_length(x: &[f64]) -> Result<usize> {
    let n = x.len();
    if n < 20 {
        return Err(Error::Incompatible(format!(
            "block-length selection needs at least 20 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let b_max = (3.0 * nf.sqrt()).min(nf / 3.0).ceil();
    let kn = 5usize.max(nf.log10().ceil() as usize);
    let m_max = nf.sqrt().ceil() as usize + kn;

    let mean = x.iter().sum::<f64>() / nf;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    // biased autocovariances up to m_max + kn
    let max_lag = (m_max + kn).min(n - 1);
    let mut acv = vec![0.0; max_lag + 1];
    for (k, slot) in acv.iter_mut().enumerate() {
        let mut s = 0.0;
        for t in 0..n - k {
            s += centered[t] * centered[t + k];
        }
        *slot = s / nf;
    }
    if acv[0] == 0.0 {
        return Err(Error::Degenerate("series has zero variance".into()));
    }

    // smallest lag m with the next kn autocorrelations all insignificant
    let threshold = 2.0 * (nf.log10() / nf).sqrt();
    let insignificant =
        |k: usize| -> bool { k > max_lag || (acv[k] / acv[0]).abs() < threshold };
    let mut m_star = m_max;
    'outer: for m in 0..m_max {
        for j in 1..=kn {
            if !insignificant(m + j) {
                continue 'outer;
            }
        }
        m_star = m;
        break;
    }
    let m = (2 * m_star).min(m_max);
    if m == 0 {
        return Ok(1);
    }

    let mut g = 0.0;
    let mut s = 0.0;
    for k in -(m as i64)..=(m as i64) {
        let lam = flat_top(k as f64 / m as f64);
        let a = acv[(k.unsigned_abs() as usize).min(max_lag)];
        g += lam * k.abs() as f64 * a;
        s += lam * a;
    }
    let d_cb = 4.0 / 3.0 * s * s;
    if d_cb == 0.0 {
        return Ok(1);
    }
    let b = (2.0 * g * g / d_cb).powf(1.0 / 3.0) * nf.powf(1.0 / 3.0);
    Ok(b.round().clamp(1.0, b_max) as usize)
}

/// Circular block bootstrap configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap resamples.
    pub n_resamples: usize,
    /// Fixed block length; `None` selects it automatically from the data.
    pub block_length: Option<usize>,
    /// Seed for the resampling RNG (one independent stream per resample).
    pub seed: u64,
    /// Confidence levels for the percentile intervals.
    pub ci_levels: Vec<f64>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_resamples: 10_000,
            block_length: None,
            seed: 0,
            ci_levels: vec![0.95, 0.99],
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_resamples < 100 {
            return Err(Error::Config(format!(
                "n_resamples {} too small, need at least 100",
                self.n_resamples
            )));
        }
        if let Some(b) = self.block_length {
            if b < 1 {
                return Err(Error::Config("block length must be at least 1".into()));
            }
        }
        for &l in &self.ci_levels {
            if !(0.0 < l && l < 1.0) {
                return Err(Error::Config(format!("confidence level {l} not in (0,1)")));
            }
        }
        Ok(())
    }
}

/// One percentile confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub excludes_zero: bool,
}

/// Bootstrap test of the correlation between two aligned series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTestResult {
    pub pearson_r: f64,
    pub intervals: Vec<ConfidenceInterval>,
    pub block_length_used: usize,
    pub n_points: usize,
    /// Resamples that were redrawn because a resampled series had zero
    /// variance; a warning is warranted when above 1% of `n_resamples`.
    pub degenerate_redraws: usize,
    pub rng_algorithm: String,
}

impl CorrelationTestResult {
    pub fn significant_at(&self, level: f64) -> Option<bool> {
        self.intervals
            .iter()
            .find(|ci| (ci.level - level).abs() < 1e-9)
            .map(|ci| ci.excludes_zero)
    }

    /// `**` when the 99% interval excludes zero, `*` when only the 95% one
    /// does, empty otherwise.
    pub fn stars(&self) -> &'static str {
        if self.significant_at(0.99) == Some(true) {
            "**"
        } else if self.significant_at(0.95) == Some(true) {
            "*"
        } else {
            ""
        }
    }
}

/// Linear-interpolation empirical quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

fn resample_pearson(
    x: &[f64],
    y: &[f64],
    block: usize,
    rng: &mut ChaCha8Rng,
    redraws: &mut usize,
) -> Result<f64> {
    let n = x.len();
    let mut rx = vec![0.0; n];
    let mut ry = vec![0.0; n];
    for _attempt in 0..100 {
        let mut filled = 0;
        while filled < n {
            let start = rng.gen_range(0..n);
            for offset in 0..block {
                if filled == n {
                    break;
                }
                let idx = (start + offset) % n;
                rx[filled] = x[idx];
                ry[filled] = y[idx];
                filled += 1;
            }
        }
        match pearson(&rx, &ry) {
            Ok(r) => return Ok(r),
            Err(Error::Degenerate(_)) => {
                *redraws += 1;
                continue;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degenerate(
        "resampling produced zero-variance series 100 times in a row".into(),
    ))
}

/// Circular block bootstrap of the paired series `(x, y)`: blocks are drawn
/// jointly so the cross-correlation survives resampling. Percentile
/// intervals at each configured level; deterministic given the seed (each
/// resample runs on its own ChaCha8 stream, so the parallel map cannot
/// reorder draws).
pub fn block_bootstrap_ci(
    x: &[f64],
    y: &[f64],
    cfg: &BootstrapConfig,
) -> Result<CorrelationTestResult> {
    cfg.validate()?;
    let r = pearson(x, y)?;
    let block = match cfg.block_length {
        Some(b) => b.min(x.len()),
        None => {
            let bx = optimal_block_length(x)?;
            let by = optimal_block_length(y)?;
            bx.max(by) // the more persistent series sets the length
        }
    };

    let draws: Vec<(f64, usize)> = (0..cfg.n_resamples)
        .into_par_iter()
        .map(|i| -> Result<(f64, usize)> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            let mut redraws = 0usize;
            let r = resample_pearson(x, y, block, &mut rng, &mut redraws)?;
            Ok((r, redraws))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rs: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let degenerate_redraws: usize = draws.iter().map(|d| d.1).sum();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let intervals = cfg
        .ci_levels
        .iter()
        .map(|&level| {
            let alpha = (1.0 - level) / 2.0;
            let lower = quantile_sorted(&rs, alpha);
            let upper = quantile_sorted(&rs, 1.0 - alpha);
            ConfidenceInterval {
                level,
                lower,
                upper,
                excludes_zero: lower > 0.0 || upper < 0.0,
            }
        })
        .collect();

    Ok(CorrelationTestResult {
        pearson_r: r,
        intervals,
        block_length_used: block,
        n_points: x.len(),
        degenerate_redraws,
        rng_algorithm: RNG_ALGORITHM.to_owned(),
    })
}

/// Grid-invariant parameters of the interplay report.
#[derive(Debug, Clone, Copy)]
pub struct GridBaseParams {
    pub d_t: usize,
    pub theta_forward: usize,
    pub smoothing_divisor: f64,
    pub filter: GraphKind,
}

/// One `(theta, L, measure)` cell of the interplay grid.
#[derive(Debug, Clone, Serialize)]
pub struct InterplayCell {
    pub theta: usize,
    pub lookback: usize,
    pub measure: SimilarityMeasure,
    pub n_points: usize,
    /// `None` when the data cannot populate the cell.
    pub result: Option<CorrelationTestResult>,
}

/// Correlation of the persistence signal with `q` over the full parameter
/// grid, for both the edge-survival and the metacorrelation predictor.
/// Cells without enough data are present but marked absent.
pub fn grid_interplay_report(
    ret: &ReturnTable,
    theta_grid: &[usize],
    l_grid: &[usize],
    base: &GridBaseParams,
    bootstrap: &BootstrapConfig,
) -> Result<Vec<InterplayCell>> {
    bootstrap.validate()?;
    let mut cells = Vec::new();
    for &theta in theta_grid {
        let cfg = NetworkConfig {
            theta,
            d_t: base.d_t,
            theta_forward: base.theta_forward,
            smoothing_divisor: base.smoothing_divisor,
            filter: base.filter,
        };
        // One network pass serves every lookback and both measures.
        let nets = if ret.n_obs() >= theta {
            Some(compute_windowed_networks(ret, &cfg, true)?)
        } else {
            None
        };
        for &lookback in l_grid {
            for measure in [
                SimilarityMeasure::EdgeSurvival,
                SimilarityMeasure::Metacorrelation,
            ] {
                let series = match &nets {
                    Some(nets) => Some(signal_series_from_networks(
                        nets,
                        lookback,
                        measure,
                        base.smoothing_divisor,
                    )?),
                    None => None,
                };
                let (n_points, result) = match series {
                    Some(s) if s.len() >= 3 => {
                        let es = s.predictors();
                        let q = s.q_values();
                        (s.len(), Some(block_bootstrap_ci(&es, &q, bootstrap)?))
                    }
                    Some(s) => (s.len(), None),
                    None => (0, None),
                };
                cells.push(InterplayCell {
                    theta,
                    lookback,
                    measure,
                    n_points,
                    result,
                });
            }
        }
    }
    Ok(cells)
}
