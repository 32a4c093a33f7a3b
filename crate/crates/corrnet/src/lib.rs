//! Correlation-network persistence analytics for equity markets.
//!
//! The library turns a table of daily closing prices into a pair of aligned
//! time series per rolling window:
//!
//! - a backward-looking *correlation structure persistence* signal, the
//!   exponentially weighted average fraction of edges a window's filtered
//!   correlation network (PMFG or MST) shares with its recent predecessors;
//! - a forward-looking *volatility ratio* `q`, realized market volatility
//!   over the next window divided by the smoothed volatility estimated on
//!   the current window (`q > 1` means history underestimated risk).
//!
//! On top of the signals it provides the statistical tooling needed to act
//! on them: Pearson interplay with circular block-bootstrap confidence
//! intervals (automatic block length), logistic-regression forecasting of
//! the direction of `q` with ROC/AUC analysis, a past-`q` null model and a
//! KNN baseline, and a synthetic factor-model market generator for
//! end-to-end validation.
//!
//! Modules follow the pipeline order: [`ingest`] -> [`ewstats`] ->
//! [`netfilter`] -> [`persistence`] -> [`volratio`] -> [`stats`] /
//! [`classify`]. [`synth`] generates test markets and [`pipeline`] wires
//! everything into the CLI subcommands (`normalize`, `interplay`,
//! `forecast`, `temporal`, `synth`).

pub mod classify;
pub mod config;
pub mod error;
pub mod ewstats;
pub mod ingest;
pub mod netfilter;
pub mod persistence;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;
pub mod volratio;

pub use error::{Error, Result};
