//! Forecasting the direction of the volatility ratio.
//!
//! A one-predictor logistic regression maps the persistence signal to
//! `P{Y=1}`; prediction thresholds that probability at `p_max` (strict
//! inequality, default 0.5). The train/test split is chronological. The
//! comparison baseline replaces the persistence predictor with the most
//! recent fully realized `q` (no lookahead); a binomial null model measures
//! whether the persistence predictor beats what `q`'s own autocorrelation
//! explains. ROC/AUC sweeps the threshold; the temporal analysis counts
//! in-sample prediction successes across the parameter grid per window.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ingest::ReturnTable;
use crate::stats::GridBaseParams;
use crate::volratio::{
    compute_windowed_networks, past_q_values, signal_series_from_networks, NetworkConfig,
    SignalPoint, SignalSeries,
};

/// Numerically stable logistic function.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t
    } else if t < -30.0 {
        t.exp()
    } else {
        t.exp().ln_1p()
    }
}

/// Fitted one-predictor logistic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub beta0: f64,
    pub beta1: f64,
    pub converged: bool,
    pub n_iterations: usize,
    /// Set when the classes are completely separated in the predictor; the
    /// likelihood then has no finite maximum and the coefficients are
    /// whatever the iteration cap left in place. Predictions remain
    /// well-defined through the threshold.
    pub perfect_separation: bool,
}

impl LogisticModel {
    /// Predictor value where the modeled probability crosses 0.5.
    pub fn decision_threshold(&self) -> Option<f64> {
        (self.beta1 != 0.0).then(|| -self.beta0 / self.beta1)
    }

    pub fn probability(&self, x: f64) -> f64 {
        sigmoid(self.beta0 + self.beta1 * x)
    }
}

fn log_likelihood(x: &[f64], y: &[bool], b0: f64, b1: f64) -> f64 {
    let mut ll = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let t = b0 + b1 * xi;
        ll -= if yi { softplus(-t) } else { softplus(t) };
    }
    ll
}

const GRADIENT_TOLERANCE: f64 = 1e-8;
const MAX_ITERATIONS: usize = 500;

/// Maximum-likelihood fit by Newton iterations with step halving, so the
/// log-likelihood never decreases. Completely separated data is flagged and
/// runs to the iteration cap instead of pretending to converge.
pub fn fit_logistic(x: &[f64], y: &[bool]) -> Result<LogisticModel> {
    fit_logistic_traced(x, y).map(|(m, _)| m)
}

/// Same fit, also returning the log-likelihood after every iteration
/// (index 0 is the likelihood of the zero model).
pub fn fit_logistic_traced(x: &[f64], y: &[bool]) -> Result<(LogisticModel, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::Incompatible(format!(
            "predictor and target lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 4 {
        return Err(Error::Incompatible(format!(
            "need at least 4 observations, got {}",
            x.len()
        )));
    }
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::Degenerate(
            "single-class target: logistic fit undefined".into(),
        ));
    }

    // complete separation: the positive and negative predictor ranges do
    // not overlap, so the likelihood supremum sits at infinite coefficients
    let max0 = x
        .iter()
        .zip(y)
        .filter(|(_, &yi)| !yi)
        .map(|(&xi, _)| xi)
        .fold(f64::NEG_INFINITY, f64::max);
    let min0 = x
        .iter()
        .zip(y)
        .filter(|(_, &yi)| !yi)
        .map(|(&xi, _)| xi)
        .fold(f64::INFINITY, f64::min);
    let max1 = x
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi)
        .map(|(&xi, _)| xi)
        .fold(f64::NEG_INFINITY, f64::max);
    let min1 = x
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi)
        .map(|(&xi, _)| xi)
        .fold(f64::INFINITY, f64::min);
    let separated = min1 > max0 || min0 > max1;

    let mut b0 = 0.0;
    let mut b1 = 0.0;
    let mut ll = log_likelihood(x, y, b0, b1);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        let mut g0 = 0.0;
        let mut g1 = 0.0;
        let mut h00 = 0.0;
        let mut h01 = 0.0;
        let mut h11 = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            let p = sigmoid(b0 + b1 * xi);
            let r = f64::from(u8::from(yi)) - p;
            let w = p * (1.0 - p);
            g0 += r;
            g1 += r * xi;
            h00 += w;
            h01 += w * xi;
            h11 += w * xi * xi;
        }
        if !separated && (g0 * g0 + g1 * g1).sqrt() < GRADIENT_TOLERANCE {
            converged = true;
            iterations = iter;
            break;
        }
        let det = h00 * h11 - h01 * h01;
        let (mut d0, mut d1) = if det.abs() > 1e-300 {
            ((h11 * g0 - h01 * g1) / det, (h00 * g1 - h01 * g0) / det)
        } else {
            // saturated probabilities: fall back to a plain gradient step
            (g0, g1)
        };
        // step halving keeps the ascent monotone
        let mut accepted = false;
        for _ in 0..60 {
            let cand = log_likelihood(x, y, b0 + d0, b1 + d1);
            if cand >= ll {
                b0 += d0;
                b1 += d1;
                ll = cand;
                accepted = true;
                break;
            }
            d0 *= 0.5;
            d1 *= 0.5;
        }
        trace.push(ll);
        if !accepted && !separated {
            // no ascent direction left at floating-point resolution
            converged = (g0 * g0 + g1 * g1).sqrt() < 1e-6;
            break;
        }
    }

    Ok((
        LogisticModel {
            beta0: b0,
            beta1: b1,
            converged: converged && !separated,
            n_iterations: iterations,
            perfect_separation: separated,
        },
        trace,
    ))
}

/// Classifies one predictor value: positive iff the modeled probability
/// strictly exceeds `p_max`.
pub fn predict(model: &LogisticModel, x: f64, p_max: f64) -> bool {
    model.probability(x) > p_max
}

/// Chronological split: the earliest `(1 - f_test)` fraction trains, the
/// latest `f_test` fraction tests. No shuffling.
pub fn split_train_test(series: &SignalSeries, f_test: f64) -> Result<(SignalSeries, SignalSeries)> {
    if !(0.0 < f_test && f_test < 1.0) {
        return Err(Error::Config(format!("f_test {f_test} not in (0, 1)")));
    }
    let n = series.len();
    let n_test = (f_test * n as f64 + 1e-9).floor() as usize;
    let n_train = n - n_test;
    if n_train == 0 || n_test == 0 {
        return Err(Error::Incompatible(format!(
            "split of {n} points into {n_train} train / {n_test} test leaves a side empty"
        )));
    }
    let mk = |points: &[SignalPoint]| SignalSeries {
        params: series.params,
        filter: series.filter,
        measure: series.measure,
        points: points.to_vec(),
    };
    Ok((mk(&series.points[..n_train]), mk(&series.points[n_train..])))
}

/// Above this test fraction the training set gets too small for a stable
/// calibration; callers should warn.
pub const F_TEST_ROBUSTNESS_BOUND: f64 = 0.40;

/// Confusion counts. Quadrant naming: Q1 = true positive, Q2 = false
/// negative, Q3 = true negative, Q4 = false positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    pub false_positive: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_negative + self.true_negative + self.false_positive
    }

    /// Fraction of correct predictions.
    pub fn p_plus(&self) -> f64 {
        (self.true_positive + self.true_negative) as f64 / self.total() as f64
    }

    /// Sensitivity; absent when the sample has no positives.
    pub fn tpr(&self) -> Option<f64> {
        let pos = self.true_positive + self.false_negative;
        (pos > 0).then(|| self.true_positive as f64 / pos as f64)
    }

    /// False-alarm rate; absent when the sample has no negatives.
    pub fn fpr(&self) -> Option<f64> {
        let neg = self.true_negative + self.false_positive;
        (neg > 0).then(|| self.false_positive as f64 / neg as f64)
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.true_positive += 1,
            (false, true) => self.false_negative += 1,
            (false, false) => self.true_negative += 1,
            (true, false) => self.false_positive += 1,
        }
    }
}

/// Single-threshold evaluation of a fitted model on a test series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub counts: ConfusionCounts,
    pub p_plus: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

pub fn evaluate(model: &LogisticModel, test: &SignalSeries, p_max: f64) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Incompatible("empty test set".into()));
    }
    let mut counts = ConfusionCounts::default();
    for p in &test.points {
        counts.add(predict(model, p.es, p_max), p.y);
    }
    Ok(Evaluation {
        counts,
        p_plus: counts.p_plus(),
        tpr: counts.tpr(),
        fpr: counts.fpr(),
    })
}

/// One point of the ROC sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub p_max: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from raw scores: the discriminant threshold sweeps all
/// distinct scores plus the endpoints 0 and 1, so the curve always runs
/// from (0,0) to (1,1). AUC by the trapezoid rule.
pub fn roc_from_scores(scores: &[f64], labels: &[bool]) -> Result<(Vec<RocPoint>, f64)> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Incompatible("scores and labels must align".into()));
    }
    let n_pos = labels.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::Degenerate(
            "ROC needs both classes in the test set".into(),
        ));
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.push(0.0);
    thresholds.push(1.0);
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len());
    for &p_max in &thresholds {
        let mut counts = ConfusionCounts::default();
        for (&s, &y) in scores.iter().zip(labels) {
            counts.add(s > p_max, y);
        }
        points.push(RocPoint {
            p_max,
            fpr: counts.fpr().unwrap(),
            tpr: counts.tpr().unwrap(),
        });
    }
    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
    }
    Ok((points, auc))
}

/// ROC of a fitted model over a test series.
pub fn roc_curve(model: &LogisticModel, test: &SignalSeries) -> Result<(Vec<RocPoint>, f64)> {
    let scores: Vec<f64> = test.points.iter().map(|p| model.probability(p.es)).collect();
    roc_from_scores(&scores, &test.targets())
}

/// Exact binomial tail `P(X >= k)` computed by an incremental-ratio sum in
/// ordinary precision; `k = round(n * p_plus_es)`.
pub fn null_model_pvalue(p_plus_es: f64, p_plus_q: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Incompatible("empty test set".into()));
    }
    if !(0.0 < p_plus_q && p_plus_q < 1.0) {
        return Err(Error::Degenerate(format!(
            "null success probability {p_plus_q} outside (0, 1)"
        )));
    }
    let k = (p_plus_es * n as f64).round() as u64;
    let n = n as u64;
    if k == 0 {
        return Ok(1.0);
    }
    if k > n {
        return Ok(0.0);
    }
    let p = p_plus_q;
    let q = 1.0 - p;
    // log of the first term C(n,k) p^k q^(n-k)
    let mut ln_c = 0.0;
    for i in 0..k {
        ln_c += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    let ln_first = ln_c + k as f64 * p.ln() + (n - k) as f64 * q.ln();
    // sum the tail via successive term ratios
    let mut scaled_sum = 1.0;
    let mut term = 1.0;
    for j in k..n {
        term *= (n - j) as f64 / (j + 1) as f64 * (p / q);
        scaled_sum += term;
        if term < 1e-18 * scaled_sum {
            break;
        }
    }
    Ok((ln_first.exp() * scaled_sum).min(1.0))
}

/// Stars for the binomial null comparison: `**` below 0.001, `*` below 0.01.
pub fn pvalue_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "**"
    } else if p < 0.01 {
        "*"
    } else {
        ""
    }
}

/// Replaces the persistence predictor with the most recent fully realized
/// `q` (per `past_q`, indexed by window index). Windows with no realized
/// past `q` are excluded.
pub fn past_q_predictor(series: &SignalSeries, past_q: &[Option<f64>]) -> SignalSeries {
    SignalSeries {
        params: series.params,
        filter: series.filter,
        measure: series.measure,
        points: series
            .points
            .iter()
            .filter_map(|p| {
                past_q.get(p.window_index).copied().flatten().map(|q_prev| SignalPoint {
                    es: q_prev,
                    ..*p
                })
            })
            .collect(),
    }
}

/// Majority vote of the `k` nearest training predictors (absolute
/// distance, ties broken by training order for determinism).
pub fn knn_predict(train_x: &[f64], train_y: &[bool], x: f64, k: usize) -> Result<bool> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::Config(format!("k = {k} must be odd and positive")));
    }
    if k > train_x.len() {
        return Err(Error::Config(format!(
            "k = {k} exceeds training size {}",
            train_x.len()
        )));
    }
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    order.sort_by(|&a, &b| {
        let da = (train_x[a] - x).abs();
        let db = (train_x[b] - x).abs();
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    let votes = order[..k].iter().filter(|&&i| train_y[i]).count();
    Ok(2 * votes > k)
}

/// KNN under the same chronological protocol as the logistic forecast.
pub fn knn_forecast(series: &SignalSeries, f_test: f64, k: usize) -> Result<Evaluation> {
    let (train, test) = split_train_test(series, f_test)?;
    let (tx, ty) = (train.predictors(), train.targets());
    let mut counts = ConfusionCounts::default();
    for p in &test.points {
        counts.add(knn_predict(&tx, &ty, p.es, k)?, p.y);
    }
    Ok(Evaluation {
        counts,
        p_plus: counts.p_plus(),
        tpr: counts.tpr(),
        fpr: counts.fpr(),
    })
}

/// Out-of-sample report for one predictor.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifierReport {
    pub model: LogisticModel,
    pub counts: ConfusionCounts,
    pub p_plus: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub roc_points: Vec<RocPoint>,
    pub auc: Option<f64>,
    /// Binomial tail probability of the persistence predictor's success
    /// count under the past-`q` null; only set on the persistence report.
    pub p_value_vs_null: Option<f64>,
    pub f_test: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Side-by-side forecast of the persistence predictor and the past-`q`
/// null on identical test windows.
#[derive(Debug, Clone, Serialize)]
pub struct ForecastComparison {
    pub es_report: ClassifierReport,
    pub past_q_report: ClassifierReport,
    pub knn: Option<Evaluation>,
    /// Windows common to both predictors after alignment.
    pub n_common: usize,
}

/// Fits and evaluates both predictors on the intersection of their defined
/// windows, so the success probabilities and the null comparison use
/// identical test sets.
pub fn forecast_with_null(
    series: &SignalSeries,
    past_q: &[Option<f64>],
    f_test: f64,
    p_max: f64,
    knn_k: Option<usize>,
) -> Result<ForecastComparison> {
    let null_series = past_q_predictor(series, past_q);
    let common: BTreeSet<usize> = null_series.points.iter().map(|p| p.window_index).collect();
    let es_series = series.restrict_to(&common);
    if es_series.is_empty() {
        return Err(Error::Incompatible(
            "no windows with both a persistence value and a realized past q".into(),
        ));
    }

    let build = |s: &SignalSeries| -> Result<(ClassifierReport, SignalSeries)> {
        let (train, test) = split_train_test(s, f_test)?;
        let model = fit_logistic(&train.predictors(), &train.targets())?;
        let eval = evaluate(&model, &test, p_max)?;
        let roc = roc_curve(&model, &test).ok();
        let (roc_points, auc) = match roc {
            Some((pts, a)) => (pts, Some(a)),
            None => (Vec::new(), None),
        };
        Ok((
            ClassifierReport {
                model,
                counts: eval.counts,
                p_plus: eval.p_plus,
                tpr: eval.tpr,
                fpr: eval.fpr,
                roc_points,
                auc,
                p_value_vs_null: None,
                f_test,
                n_train: train.len(),
                n_test: test.len(),
            },
            test,
        ))
    };

    let (mut es_report, es_test) = build(&es_series)?;
    let (past_q_report, _) = build(&null_series)?;
    es_report.p_value_vs_null =
        null_model_pvalue(es_report.p_plus, past_q_report.p_plus, es_test.len()).ok();

    let knn = match knn_k {
        Some(k) => Some(knn_forecast(&es_series, f_test, k)?),
        None => None,
    };

    Ok(ForecastComparison {
        es_report,
        past_q_report,
        knn,
        n_common: es_series.len(),
    })
}

/// Per-window success counts across the parameter grid, in sample.
#[derive(Debug, Clone, Serialize)]
pub struct TemporalPoint {
    /// Index of the first forward observation (window start + theta): the
    /// same physical day for every grid cell that reaches it.
    pub decision_index: usize,
    pub correct_es: usize,
    pub total_es: usize,
    pub correct_q: usize,
    pub total_q: usize,
}

impl TemporalPoint {
    pub fn n_plus_es(&self) -> Option<f64> {
        (self.total_es > 0).then(|| self.correct_es as f64 / self.total_es as f64)
    }

    pub fn n_plus_q(&self) -> Option<f64> {
        (self.total_q > 0).then(|| self.correct_q as f64 / self.total_q as f64)
    }
}

/// In-sample success-fraction series over the whole grid.
#[derive(Debug, Clone, Serialize)]
pub struct TemporalReport {
    pub points: Vec<TemporalPoint>,
    pub mean_es: f64,
    pub mean_q: f64,
    pub grid_size: usize,
    /// Cells whose in-sample target had a single class, excluded from the
    /// denominators: (theta, lookback, predictor).
    pub skipped_cells: Vec<(usize, usize, String)>,
}

/// Calibrates each grid cell on the entire period (in sample), predicts
/// every aligned window, and aggregates per-window success fractions for
/// the persistence predictor and the past-`q` null. Cells a window cannot
/// reach shrink that window's denominator.
pub fn temporal_analysis(
    ret: &ReturnTable,
    theta_grid: &[usize],
    l_grid: &[usize],
    base: &GridBaseParams,
    p_max: f64,
) -> Result<TemporalReport> {
    use std::collections::BTreeMap;
    let mut agg: BTreeMap<usize, TemporalPoint> = BTreeMap::new();
    let mut skipped = Vec::new();

    let tally = |key: usize, is_es: bool, correct: bool, agg: &mut BTreeMap<usize, TemporalPoint>| {
        let e = agg.entry(key).or_insert(TemporalPoint {
            decision_index: key,
            correct_es: 0,
            total_es: 0,
            correct_q: 0,
            total_q: 0,
        });
        if is_es {
            e.total_es += 1;
            e.correct_es += usize::from(correct);
        } else {
            e.total_q += 1;
            e.correct_q += usize::from(correct);
        }
    };

    for &theta in theta_grid {
        if ret.n_obs() < theta {
            continue; // absent cells shrink denominators
        }
        let cfg = NetworkConfig {
            theta,
            d_t: base.d_t,
            theta_forward: base.theta_forward,
            smoothing_divisor: base.smoothing_divisor,
            filter: base.filter,
        };
        let nets = compute_windowed_networks(ret, &cfg, false)?;
        let past = past_q_values(&nets)?;
        for &lookback in l_grid {
            let series = signal_series_from_networks(
                &nets,
                lookback,
                crate::persistence::SimilarityMeasure::EdgeSurvival,
                base.smoothing_divisor,
            )?;
            // persistence predictor, calibrated on the full period
            match fit_logistic(&series.predictors(), &series.targets()) {
                Ok(model) => {
                    for p in &series.points {
                        let correct = predict(&model, p.es, p_max) == p.y;
                        tally(p.window_start + theta, true, correct, &mut agg);
                    }
                }
                Err(Error::Degenerate(_)) | Err(Error::Incompatible(_)) => {
                    skipped.push((theta, lookback, "persistence".to_owned()));
                }
                Err(e) => return Err(e),
            }
            // past-q null under the same protocol
            let null_series = past_q_predictor(&series, &past);
            match fit_logistic(&null_series.predictors(), &null_series.targets()) {
                Ok(model) => {
                    for p in &null_series.points {
                        let correct = predict(&model, p.es, p_max) == p.y;
                        tally(p.window_start + theta, false, correct, &mut agg);
                    }
                }
                Err(Error::Degenerate(_)) | Err(Error::Incompatible(_)) => {
                    skipped.push((theta, lookback, "past-q".to_owned()));
                }
                Err(e) => return Err(e),
            }
        }
    }

    let points: Vec<TemporalPoint> = agg.into_values().collect();
    let mean_of = |vals: Vec<f64>| -> f64 {
        if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    let mean_es = mean_of(points.iter().filter_map(|p| p.n_plus_es()).collect());
    let mean_q = mean_of(points.iter().filter_map(|p| p.n_plus_q()).collect());
    Ok(TemporalReport {
        points,
        mean_es,
        mean_q,
        grid_size: theta_grid.len() * l_grid.len(),
        skipped_cells: skipped,
    })
}
