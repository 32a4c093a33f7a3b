//! Synthetic factor-model markets with controllable regime changes.
//!
//! Returns follow `r_i(t) = sum_f loading[i][f] * F_f(t) + eps_i(t)` with
//! independent normal factors and noise; prices start at 100 and compound
//! the log-returns. One RNG stream per table keeps generation deterministic
//! given the seed, and the draw count per day is independent of the regime,
//! so two specs differing only in loadings see identical innovations.
//!
//! [`regime_switch_benchmark`] encodes a crisis-like transition where the
//! correlation ranking churns and factor volatility doubles at midpoint:
//! sector membership is interleaved in the first half and contiguous in
//! the second, so the network rebuilds while windows straddle the switch.

use chrono::{Days, NaiveDate};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PriceTable;

/// One homogeneous stretch of the generated market.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Regime {
    /// Length in return observations.
    pub duration: usize,
    /// `n_assets x n_factors` loading matrix.
    pub loadings: Vec<Vec<f64>>,
    /// Per-day standard deviation of every factor.
    pub factor_vol: f64,
    /// Per-day standard deviation of the idiosyncratic noise.
    pub idio_vol: f64,
}

/// Full generator specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_assets: usize,
    /// Total return observations; regime durations must sum to this.
    pub n_days: usize,
    pub regimes: Vec<Regime>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() {
            return Err(Error::Config("need at least one regime".into()));
        }
        let total: usize = self.regimes.iter().map(|r| r.duration).sum();
        if total != self.n_days {
            return Err(Error::Config(format!(
                "regime durations sum to {total}, expected n_days = {}",
                self.n_days
            )));
        }
        let n_factors = self.regimes[0].loadings.first().map_or(0, Vec::len);
        for (k, regime) in self.regimes.iter().enumerate() {
            if !(regime.factor_vol > 0.0) || !(regime.idio_vol > 0.0) {
                return Err(Error::Config(format!("regime {k}: volatilities must be positive")));
            }
            if regime.loadings.len() != self.n_assets {
                return Err(Error::Config(format!(
                    "regime {k}: {} loading rows for {} assets",
                    regime.loadings.len(),
                    self.n_assets
                )));
            }
            for row in &regime.loadings {
                if row.len() != n_factors {
                    return Err(Error::Config(format!(
                        "regime {k}: ragged loading rows ({} vs {n_factors} factors)",
                        row.len()
                    )));
                }
                if row.iter().any(|l| !l.is_finite()) {
                    return Err(Error::Config(format!("regime {k}: non-finite loading")));
                }
            }
        }
        Ok(())
    }

    pub fn n_factors(&self) -> usize {
        self.regimes[0].loadings.first().map_or(0, Vec::len)
    }
}

/// Generates the price table: `n_days + 1` rows of prices starting at 100.
pub fn generate(spec: &SynthSpec) -> Result<PriceTable> {
    spec.validate()?;
    let n = spec.n_assets;
    let n_factors = spec.n_factors();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut returns = Array2::zeros((spec.n_days, n));
    let mut day = 0usize;
    let mut factors = vec![0.0; n_factors];
    for regime in &spec.regimes {
        for _ in 0..regime.duration {
            for f in factors.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *f = regime.factor_vol * z;
            }
            for i in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                let systematic: f64 = regime.loadings[i]
                    .iter()
                    .zip(&factors)
                    .map(|(l, f)| l * f)
                    .sum();
                returns[[day, i]] = systematic + regime.idio_vol * z;
            }
            day += 1;
        }
    }

    let mut prices = Array2::zeros((spec.n_days + 1, n));
    for i in 0..n {
        prices[[0, i]] = 100.0;
        for t in 0..spec.n_days {
            prices[[t + 1, i]] = prices[[t, i]] * returns[[t, i]].exp();
        }
    }

    let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
    let dates: Vec<String> = (0..=spec.n_days)
        .map(|t| {
            start
                .checked_add_days(Days::new(t as u64))
                .unwrap()
                .format("%Y-%m-%d")
                .to_string()
        })
        .collect();
    let tickers: Vec<String> = (0..n).map(|i| format!("SYN{i:03}")).collect();
    PriceTable::new(dates, tickers, prices)
}

/// Canonical two-regime benchmark: 50 assets over 3000 days. The first
/// 1500 days use interleaved sector membership; the second half reassigns
/// every asset to a contiguous sector block and doubles the factor
/// volatility. Correlation ranking churns exactly when risk rises, so the
/// persistence signal drops while the volatility ratio spikes.
pub fn regime_switch_spec(seed: u64) -> SynthSpec {
    let n_assets = 50;
    let n_sectors = 5;
    let per_sector = n_assets / n_sectors;
    // factor 0 is the market, factors 1..=5 the sectors
    let n_factors = n_sectors + 1;

    // deterministic heterogeneous magnitudes keep the within-regime edge
    // ranking stable against sampling noise
    let sector_strength = |i: usize| 0.7 + 0.6 * ((i * 7) % 10) as f64 / 9.0;
    let market_strength = |i: usize| 0.25 + 0.15 * ((i * 3) % 10) as f64 / 9.0;

    let loadings_for = |assign: &dyn Fn(usize) -> usize| -> Vec<Vec<f64>> {
        (0..n_assets)
            .map(|i| {
                let mut row = vec![0.0; n_factors];
                row[0] = market_strength(i);
                row[1 + assign(i)] = sector_strength(i);
                row
            })
            .collect()
    };

    let interleaved = loadings_for(&|i| i % n_sectors);
    let contiguous = loadings_for(&|i| i / per_sector);

    SynthSpec {
        n_assets,
        n_days: 3000,
        regimes: vec![
            Regime {
                duration: 1500,
                loadings: interleaved,
                factor_vol: 0.010,
                idio_vol: 0.012,
            },
            Regime {
                duration: 1500,
                loadings: contiguous,
                factor_vol: 0.020,
                idio_vol: 0.012,
            },
        ],
        seed,
    }
}

/// Generates the canonical benchmark table for the given seed.
pub fn regime_switch_benchmark(seed: u64) -> PriceTable {
    generate(&regime_switch_spec(seed)).expect("benchmark spec is valid")
}

/// Day index (in return observations) of the benchmark's regime switch.
pub const REGIME_SWITCH_DAY: usize = 1500;
