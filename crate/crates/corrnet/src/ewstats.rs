//! Exponentially-smoothed correlation matrices and market volatility.
//!
//! Within a window of `theta` observations, observation `t` (1-based, `t =
//! theta` most recent) carries weight `w_t ∝ exp((t - theta)/alpha)` with the
//! weights normalized to sum to one. The decay scale defaults to `theta/3`.
//! Estimated quantities (correlation, window volatility) are weighted;
//! realized forward volatility is the plain unweighted standard deviation.
//! The population (divide-by-n) convention is used throughout.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Exponential weighting scheme for one estimation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingScheme {
    /// Window length in observations.
    pub theta: usize,
    /// Decay scale in observations. `f64::INFINITY` gives uniform weights.
    pub alpha: f64,
}

impl SmoothingScheme {
    pub fn new(theta: usize, alpha: f64) -> Result<Self> {
        if theta < 2 {
            return Err(Error::Config(format!(
                "window length {theta} too short, need at least 2"
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("decay scale {alpha} must be > 0")));
        }
        Ok(SmoothingScheme { theta, alpha })
    }

    /// Default decay scale `theta / 3`.
    pub fn for_window(theta: usize) -> Result<Self> {
        Self::new(theta, theta as f64 / 3.0)
    }

    /// Decay scale `theta / divisor`; `divisor = 3` is the default scheme.
    pub fn with_divisor(theta: usize, divisor: f64) -> Result<Self> {
        if !(divisor > 0.0) {
            return Err(Error::Config(format!(
                "smoothing divisor {divisor} must be > 0"
            )));
        }
        Self::new(theta, theta as f64 / divisor)
    }

    /// Uniform weights (the `alpha -> inf` limit).
    pub fn uniform(theta: usize) -> Result<Self> {
        Self::new(theta, f64::INFINITY)
    }
}

/// Normalized weights, oldest first, strictly increasing toward the most
/// recent observation, summing to one.
pub fn ew_weights(scheme: &SmoothingScheme) -> Vec<f64> {
    let theta = scheme.theta;
    let mut w: Vec<f64> = (1..=theta)
        .map(|t| ((t as f64 - theta as f64) / scheme.alpha).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Weighted covariance matrix of the window columns.
///
/// `Cov_w(i,j) = sum_t w_t (r_i(t) - mu_i)(r_j(t) - mu_j)` with `mu` the
/// weighted column means. Errors on constant columns, which would poison
/// the correlation-based edge ranking downstream.
pub fn ew_covariance(window: ArrayView2<f64>, scheme: &SmoothingScheme) -> Result<Array2<f64>> {
    check_window(window, scheme)?;
    let w = Array1::from(ew_weights(scheme));
    let mu = w.dot(&window);
    let sqrt_w = w.mapv(f64::sqrt);
    let mut scaled = &window - &mu.view().insert_axis(Axis(0));
    scaled *= &sqrt_w.view().insert_axis(Axis(1));
    Ok(scaled.t().dot(&scaled))
}

/// Weighted Pearson correlation matrix of the window columns: symmetric,
/// unit diagonal, entries clamped to `[-1, 1]`.
pub fn ew_correlation(window: ArrayView2<f64>, scheme: &SmoothingScheme) -> Result<Array2<f64>> {
    let cov = ew_covariance(window, scheme)?;
    let n = cov.nrows();
    let sd: Vec<f64> = (0..n).map(|i| cov[[i, i]].sqrt()).collect();
    let mut rho = Array2::zeros((n, n));
    for i in 0..n {
        rho[[i, i]] = 1.0;
        for j in i + 1..n {
            let r = (cov[[i, j]] / (sd[i] * sd[j])).clamp(-1.0, 1.0);
            rho[[i, j]] = r;
            rho[[j, i]] = r;
        }
    }
    Ok(rho)
}

fn check_window(window: ArrayView2<f64>, scheme: &SmoothingScheme) -> Result<()> {
    if window.nrows() != scheme.theta {
        return Err(Error::Incompatible(format!(
            "window has {} rows, scheme expects {}",
            window.nrows(),
            scheme.theta
        )));
    }
    for (i, col) in window.axis_iter(Axis(1)).enumerate() {
        let first = col[0];
        if col.iter().all(|&x| x == first) {
            return Err(Error::Degenerate(format!(
                "asset column {i} is constant within the window"
            )));
        }
    }
    Ok(())
}

/// Weighted volatility of the market-return series over one window:
/// `sqrt(sum_t w_t (r_M(t) - mu)^2)`.
pub fn ew_market_volatility(market_window: ArrayView1<f64>, scheme: &SmoothingScheme) -> f64 {
    assert_eq!(
        market_window.len(),
        scheme.theta,
        "market window length must match scheme"
    );
    if market_window.iter().all(|&x| x == market_window[0]) {
        return 0.0; // exactly zero, not weight-normalization noise
    }
    let w = ew_weights(scheme);
    let mu: f64 = w
        .iter()
        .zip(market_window.iter())
        .map(|(&wt, &x)| wt * x)
        .sum();
    let var: f64 = w
        .iter()
        .zip(market_window.iter())
        .map(|(&wt, &x)| wt * (x - mu) * (x - mu))
        .sum();
    var.sqrt()
}

/// Unweighted (population) standard deviation of the forward-window market
/// return. Realized volatility uses no smoothing.
pub fn realized_market_volatility(market_forward: ArrayView1<f64>) -> f64 {
    let n = market_forward.len();
    assert!(n >= 2, "forward window needs at least 2 observations");
    if market_forward.iter().all(|&x| x == market_forward[0]) {
        return 0.0;
    }
    let mu = market_forward.sum() / n as f64;
    let var = market_forward.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / n as f64;
    var.sqrt()
}
