//! The forward-looking volatility ratio `q` and the aligned signal series.
//!
//! `q(T_a)` divides the realized (unweighted) market volatility over the
//! forward window by the smoothed volatility estimated on the current
//! window: `q > 1` means the historical estimate undershot the risk that
//! followed. The binary target is `Y = 1` iff `q > 1`; the tie `q = 1` maps
//! to 0 so the label is always defined.
//!
//! [`WindowedNetworks`] carries everything the per-window pipeline produces
//! (filtered graphs, off-diagonal summaries, volatilities) so that several
//! lookbacks and measures can be derived from one pass over the data.

use ndarray::s;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ewstats::{
    ew_correlation, ew_market_volatility, realized_market_volatility, SmoothingScheme,
};
use crate::ingest::{make_windows, ReturnTable, WindowSpec};
use crate::netfilter::{build_mst, build_pmfg, FilteredGraph, GraphKind};
use crate::persistence::{persistence_weights, OffDiagonal, SimilarityMeasure};

/// Ratio of realized forward volatility to estimated window volatility.
pub fn volatility_ratio(sigma_est: f64, sigma_realized: f64) -> Result<f64> {
    if !(sigma_est > 0.0) {
        return Err(Error::Degenerate(format!(
            "estimated volatility {sigma_est} is not positive"
        )));
    }
    Ok(sigma_realized / sigma_est)
}

/// Binary target: 1 iff the historical estimate underestimated realized
/// volatility. Ties (`q = 1`) deterministically map to 0.
pub fn target_from_q(q: f64) -> bool {
    q > 1.0
}

/// Window/estimation parameters for one signal series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    /// Estimation window length in observations.
    pub theta: usize,
    /// Number of preceding windows in the persistence average.
    pub lookback: usize,
    /// Shift between adjacent windows in observations.
    pub d_t: usize,
    /// Forward window length in observations.
    pub theta_forward: usize,
    /// Decay scale is `theta / smoothing_divisor`.
    pub smoothing_divisor: f64,
}

impl SignalParams {
    pub fn validate(&self) -> Result<()> {
        if self.theta < 2 {
            return Err(Error::Config("theta must be at least 2".into()));
        }
        if self.lookback < 1 {
            return Err(Error::Config("lookback must be at least 1".into()));
        }
        if self.d_t < 1 {
            return Err(Error::Config("d_t must be at least 1".into()));
        }
        if self.theta_forward < 2 {
            return Err(Error::Config("theta_forward must be at least 2".into()));
        }
        if !(self.smoothing_divisor > 0.0) {
            return Err(Error::Config("smoothing divisor must be positive".into()));
        }
        Ok(())
    }

    /// Observations required for at least one aligned (predictor, q) pair.
    pub fn min_observations(&self) -> usize {
        self.lookback * self.d_t + self.theta + self.theta_forward
    }

    /// Human-readable description of the binding data constraint, for the
    /// empty-series warning.
    pub fn limiting_constraint(&self, t_total: usize) -> String {
        format!(
            "need lookback*d_t + theta + theta_forward = {}*{} + {} + {} = {} observations \
             for one aligned window, have {}",
            self.lookback,
            self.d_t,
            self.theta,
            self.theta_forward,
            self.min_observations(),
            t_total
        )
    }
}

/// Per-window products of one pass over the returns at a fixed `theta`.
#[derive(Debug, Clone)]
pub struct WindowedNetworks {
    pub theta: usize,
    pub d_t: usize,
    pub theta_forward: usize,
    pub filter: GraphKind,
    pub windows: Vec<WindowSpec>,
    pub graphs: Vec<FilteredGraph>,
    /// Off-diagonal summaries for the metacorrelation, when requested.
    pub offdiag: Option<Vec<OffDiagonal>>,
    /// Smoothed market volatility per window.
    pub sigma_est: Vec<f64>,
    /// Realized forward volatility, `None` for forward-incomplete windows.
    pub sigma_realized: Vec<Option<f64>>,
}

/// Configuration of the per-window network pipeline.
#[derive(Debug, Clone, Copy)]
pub struct NetworkConfig {
    pub theta: usize,
    pub d_t: usize,
    pub theta_forward: usize,
    pub smoothing_divisor: f64,
    pub filter: GraphKind,
}

/// Runs the window pipeline: correlation, filtered graph and volatilities
/// per window. Windows are processed in parallel; output order is the
/// window order regardless of scheduling.
pub fn compute_windowed_networks(
    ret: &ReturnTable,
    cfg: &NetworkConfig,
    need_offdiag: bool,
) -> Result<WindowedNetworks> {
    let scheme = SmoothingScheme::with_divisor(cfg.theta, cfg.smoothing_divisor)?;
    let windows = make_windows(ret.n_obs(), cfg.theta, cfg.d_t, cfg.theta_forward);

    struct PerWindow {
        graph: FilteredGraph,
        offdiag: Option<OffDiagonal>,
        sigma_est: f64,
        sigma_realized: Option<f64>,
    }

    let per: Vec<PerWindow> = windows
        .par_iter()
        .map(|w| -> Result<PerWindow> {
            let slice = ret.returns.slice(s![w.start..w.end, ..]);
            let rho = ew_correlation(slice, &scheme).map_err(|e| match e {
                Error::Degenerate(msg) => {
                    Error::Degenerate(format!("window starting at {}: {msg}", w.start))
                }
                other => other,
            })?;
            let graph = match cfg.filter {
                GraphKind::Pmfg => build_pmfg(rho.view())?,
                GraphKind::Mst => build_mst(rho.view())?,
            };
            let offdiag = need_offdiag.then(|| OffDiagonal::from_matrix(rho.view()));
            let market = ret.market_return.slice(s![w.start..w.end]);
            let sigma_est = ew_market_volatility(market, &scheme);
            let sigma_realized = w.forward_complete.then(|| {
                realized_market_volatility(
                    ret.market_return.slice(s![w.forward_start..w.forward_end]),
                )
            });
            Ok(PerWindow {
                graph,
                offdiag,
                sigma_est,
                sigma_realized,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut graphs = Vec::with_capacity(per.len());
    let mut offdiag = need_offdiag.then(|| Vec::with_capacity(per.len()));
    let mut sigma_est = Vec::with_capacity(per.len());
    let mut sigma_realized = Vec::with_capacity(per.len());
    for p in per {
        graphs.push(p.graph);
        if let Some(v) = offdiag.as_mut() {
            v.push(p.offdiag.unwrap());
        }
        sigma_est.push(p.sigma_est);
        sigma_realized.push(p.sigma_realized);
    }
    Ok(WindowedNetworks {
        theta: cfg.theta,
        d_t: cfg.d_t,
        theta_forward: cfg.theta_forward,
        filter: cfg.filter,
        windows,
        graphs,
        offdiag,
        sigma_est,
        sigma_realized,
    })
}

impl WindowedNetworks {
    /// Volatility ratio per window; `None` where the forward window is
    /// incomplete. Errors if any estimated volatility is zero.
    pub fn q_series(&self) -> Result<Vec<Option<f64>>> {
        self.windows
            .iter()
            .map(|w| match self.sigma_realized[w.index] {
                Some(realized) => volatility_ratio(self.sigma_est[w.index], realized).map(Some),
                None => Ok(None),
            })
            .collect()
    }

    /// Persistence value at window `a` for the requested measure.
    pub fn persistence_at(
        &self,
        a: usize,
        lookback: usize,
        measure: SimilarityMeasure,
    ) -> Result<f64> {
        match measure {
            SimilarityMeasure::EdgeSurvival => {
                crate::persistence::correlation_persistence(&self.graphs, a, lookback)
            }
            SimilarityMeasure::Metacorrelation => {
                let tri = self.offdiag.as_ref().ok_or_else(|| {
                    Error::Config(
                        "metacorrelation requested but off-diagonal summaries were not kept"
                            .into(),
                    )
                })?;
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
                    acc += wj * tri[a].correlate(&tri[a - lookback + j])?;
                }
                Ok(acc)
            }
        }
    }
}

/// One aligned observation of the signal series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalPoint {
    pub window_index: usize,
    pub window_start: usize,
    /// Persistence predictor for this window (edge-survival or
    /// metacorrelation based, per the series' `measure`).
    pub es: f64,
    pub q: f64,
    pub y: bool,
}

/// Aligned series of (persistence, q, Y) over the windows where both sides
/// are defined: at least `lookback` predecessors and a complete forward
/// window.
#[derive(Debug, Clone)]
pub struct SignalSeries {
    pub params: SignalParams,
    pub filter: GraphKind,
    pub measure: SimilarityMeasure,
    pub points: Vec<SignalPoint>,
}

impl SignalSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn predictors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.es).collect()
    }

    pub fn targets(&self) -> Vec<bool> {
        self.points.iter().map(|p| p.y).collect()
    }

    pub fn q_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.q).collect()
    }

    /// Restricts the series to the given window indices (used to compare
    /// predictors on identical windows).
    pub fn restrict_to(&self, keep: &std::collections::BTreeSet<usize>) -> SignalSeries {
        SignalSeries {
            params: self.params,
            filter: self.filter,
            measure: self.measure,
            points: self
                .points
                .iter()
                .filter(|p| keep.contains(&p.window_index))
                .copied()
                .collect(),
        }
    }
}

/// Derives the aligned signal series from precomputed windowed networks.
pub fn signal_series_from_networks(
    nets: &WindowedNetworks,
    lookback: usize,
    measure: SimilarityMeasure,
    smoothing_divisor: f64,
) -> Result<SignalSeries> {
    let mut points = Vec::new();
    for w in &nets.windows {
        if w.index < lookback || !w.forward_complete {
            continue;
        }
        let es = nets.persistence_at(w.index, lookback, measure)?;
        let q = volatility_ratio(
            nets.sigma_est[w.index],
            nets.sigma_realized[w.index].expect("forward-complete window"),
        )?;
        points.push(SignalPoint {
            window_index: w.index,
            window_start: w.start,
            es,
            q,
            y: target_from_q(q),
        });
    }
    Ok(SignalSeries {
        params: SignalParams {
            theta: nets.theta,
            lookback,
            d_t: nets.d_t,
            theta_forward: nets.theta_forward,
            smoothing_divisor,
        },
        filter: nets.filter,
        measure,
        points,
    })
}

/// Full signal-series pipeline from returns. Returns an empty series (not
/// an error) when the data is too short; see
/// [`SignalParams::limiting_constraint`] for the warning text.
pub fn build_signal_series(
    ret: &ReturnTable,
    params: &SignalParams,
    filter: GraphKind,
    measure: SimilarityMeasure,
) -> Result<SignalSeries> {
    params.validate()?;
    let cfg = NetworkConfig {
        theta: params.theta,
        d_t: params.d_t,
        theta_forward: params.theta_forward,
        smoothing_divisor: params.smoothing_divisor,
        filter,
    };
    let nets =
        compute_windowed_networks(ret, &cfg, measure == SimilarityMeasure::Metacorrelation)?;
    signal_series_from_networks(&nets, params.lookback, measure, params.smoothing_divisor)
}

/// The most recent fully realized `q` per window: for window `a` this is
/// `q(T_b)` with `b = a - ceil(theta_forward / d_t)`, the latest window
/// whose forward span ends at or before `a`'s last estimation observation.
/// `None` where no such window exists. Using anything more recent would
/// leak future information.
pub fn past_q_values(nets: &WindowedNetworks) -> Result<Vec<Option<f64>>> {
    let q = nets.q_series()?;
    let shift = nets.theta_forward.div_ceil(nets.d_t);
    Ok((0..nets.windows.len())
        .map(|a| if a >= shift { q[a - shift] } else { None })
        .collect())
}
