//! Price loading, alignment and log-return computation.
//!
//! Two CSV layouts are accepted: *wide* (`date,TICK1,TICK2,...`, one row per
//! day) and *long* (`date,ticker,price`, one row per observation). Assets
//! that miss any trading date are dropped, never imputed; the wide layout is
//! the canonical output format. Dates are opaque ordered labels (ISO-8601
//! strings sort correctly); no calendar arithmetic is performed.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Minimum number of assets: PMFG construction needs at least 4 nodes.
pub const MIN_ASSETS: usize = 4;

/// Accepted CSV layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvFormat {
    /// `date,ticker,price` rows.
    Long,
    /// `date,T1,T2,...` rows, one column per asset.
    Wide,
}

impl std::str::FromStr for CsvFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "long" | "csv-long" => Ok(CsvFormat::Long),
            "wide" | "csv-wide" => Ok(CsvFormat::Wide),
            other => Err(Error::Config(format!("unknown csv format `{other}`"))),
        }
    }
}

/// Aligned daily closing prices: `prices[[t, i]]` is asset `i` on day `t`.
#[derive(Debug, Clone)]
pub struct PriceTable {
    pub dates: Vec<String>,
    pub tickers: Vec<String>,
    pub prices: Array2<f64>,
}

impl PriceTable {
    /// Validates the construction invariants: strictly increasing dates,
    /// positive prices, at least [`MIN_ASSETS`] assets.
    pub fn new(dates: Vec<String>, tickers: Vec<String>, prices: Array2<f64>) -> Result<Self> {
        if tickers.len() < MIN_ASSETS {
            return Err(Error::Dataset(format!(
                "{} assets after alignment, need at least {MIN_ASSETS}",
                tickers.len()
            )));
        }
        if prices.nrows() != dates.len() || prices.ncols() != tickers.len() {
            return Err(Error::Dataset(format!(
                "price matrix is {}x{}, expected {}x{}",
                prices.nrows(),
                prices.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        for pair in dates.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Dataset(format!(
                    "dates not strictly increasing at `{}` -> `{}`",
                    pair[0], pair[1]
                )));
            }
        }
        if let Some(((t, i), &p)) = prices.indexed_iter().find(|(_, &p)| !(p > 0.0)) {
            return Err(Error::Dataset(format!(
                "non-positive price {p} for {} on {}",
                tickers[i], dates[t]
            )));
        }
        Ok(PriceTable {
            dates,
            tickers,
            prices,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }
}

/// Log-returns plus the equal-weight market return, one row per day pair.
#[derive(Debug, Clone)]
pub struct ReturnTable {
    /// Date label of the later day of each return.
    pub dates: Vec<String>,
    pub tickers: Vec<String>,
    /// `(T-1) x N` matrix of log-returns.
    pub returns: Array2<f64>,
    /// Cross-sectional mean of each row of `returns`.
    pub market_return: Array1<f64>,
}

impl ReturnTable {
    pub fn n_obs(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }
}

/// Result of loading a price file: the aligned table plus any tickers that
/// were dropped for missing dates.
#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub table: PriceTable,
    pub dropped: Vec<String>,
}

/// Loads and aligns a price CSV. Assets missing any date are dropped and
/// reported in [`LoadOutcome::dropped`].
pub fn load_prices(path: &Path, format: CsvFormat) -> Result<LoadOutcome> {
    let file = std::fs::File::open(path)?;
    load_prices_from(file, format)
}

/// Same as [`load_prices`] but over any reader (useful for tests).
pub fn load_prices_from<R: Read>(reader: R, format: CsvFormat) -> Result<LoadOutcome> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    match format {
        CsvFormat::Wide => load_wide(&mut rdr),
        CsvFormat::Long => load_long(&mut rdr),
    }
}

fn parse_price(field: &str, line: u64) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Format {
        line,
        message: format!("`{field}` is not a number"),
    })
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn load_wide<R: Read>(rdr: &mut csv::Reader<R>) -> Result<LoadOutcome> {
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Format {
            line: 1,
            message: "wide CSV needs a date column plus at least one ticker".into(),
        });
    }
    let tickers: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();

    // date -> row of optional prices; BTreeMap keeps dates sorted.
    let mut rows: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        let date = record
            .get(0)
            .filter(|d| !d.is_empty())
            .ok_or_else(|| Error::Format {
                line,
                message: "missing date field".into(),
            })?
            .to_owned();
        if record.len() > tickers.len() + 1 {
            return Err(Error::Format {
                line,
                message: format!(
                    "row has {} fields, header has {}",
                    record.len(),
                    tickers.len() + 1
                ),
            });
        }
        let mut prices = vec![None; tickers.len()];
        for (i, slot) in prices.iter_mut().enumerate() {
            if let Some(field) = record.get(i + 1) {
                if !field.is_empty() {
                    *slot = Some(parse_price(field, line)?);
                }
            }
        }
        if rows.insert(date.clone(), prices).is_some() {
            return Err(Error::Format {
                line,
                message: format!("duplicate date `{date}`"),
            });
        }
    }
    assemble(tickers, rows)
}

fn load_long<R: Read>(rdr: &mut csv::Reader<R>) -> Result<LoadOutcome> {
    let mut tickers: Vec<String> = Vec::new();
    let mut ticker_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut cells: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();

    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() < 3 {
            return Err(Error::Format {
                line,
                message: "long CSV rows need date,ticker,price".into(),
            });
        }
        let date = record.get(0).unwrap().to_owned();
        let ticker = record.get(1).unwrap().to_owned();
        let price = parse_price(record.get(2).unwrap(), line)?;
        let idx = *ticker_index.entry(ticker.clone()).or_insert_with(|| {
            tickers.push(ticker.clone());
            tickers.len() - 1
        });
        let row = cells.entry(date.clone()).or_default();
        if row.len() < tickers.len() {
            row.resize(tickers.len(), None);
        }
        if row[idx].is_some() {
            return Err(Error::Format {
                line,
                message: format!("duplicate (date, ticker) cell ({date}, {ticker})"),
            });
        }
        row[idx] = Some(price);
    }
    // Late-appearing tickers leave earlier rows short; pad to full width.
    let n = tickers.len();
    for row in cells.values_mut() {
        row.resize(n, None);
    }
    assemble(tickers, cells)
}

/// Drops tickers with any missing date, checks invariants, builds the table.
fn assemble(tickers: Vec<String>, rows: BTreeMap<String, Vec<Option<f64>>>) -> Result<LoadOutcome> {
    if rows.is_empty() {
        return Err(Error::Dataset("no data rows".into()));
    }
    let keep: Vec<usize> = (0..tickers.len())
        .filter(|&i| rows.values().all(|row| row[i].is_some()))
        .collect();
    let dropped: Vec<String> = (0..tickers.len())
        .filter(|i| !keep.contains(i))
        .map(|i| tickers[i].clone())
        .collect();
    if keep.len() < MIN_ASSETS {
        return Err(Error::Dataset(format!(
            "{} assets survive alignment ({} dropped), need at least {MIN_ASSETS}",
            keep.len(),
            dropped.len()
        )));
    }
    let dates: Vec<String> = rows.keys().cloned().collect();
    let mut prices = Array2::zeros((dates.len(), keep.len()));
    for (t, row) in rows.values().enumerate() {
        for (j, &i) in keep.iter().enumerate() {
            prices[[t, j]] = row[i].unwrap();
        }
    }
    let kept: Vec<String> = keep.iter().map(|&i| tickers[i].clone()).collect();
    Ok(LoadOutcome {
        table: PriceTable::new(dates, kept, prices)?,
        dropped,
    })
}

/// Writes the canonical wide CSV (`date,T1,T2,...`).
pub fn write_wide_csv<W: std::io::Write>(table: &PriceTable, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_owned()];
    header.extend(table.tickers.iter().cloned());
    wtr.write_record(&header)?;
    for (t, date) in table.dates.iter().enumerate() {
        let mut row = vec![date.clone()];
        row.extend(table.prices.row(t).iter().map(|p| p.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Daily log-returns and the equal-weight market return.
pub fn compute_returns(table: &PriceTable) -> ReturnTable {
    let t = table.n_days();
    let n = table.n_assets();
    let mut returns = Array2::zeros((t - 1, n));
    for row in 0..t - 1 {
        for col in 0..n {
            returns[[row, col]] = table.prices[[row + 1, col]].ln() - table.prices[[row, col]].ln();
        }
    }
    let market_return = returns.mean_axis(ndarray::Axis(1)).unwrap();
    ReturnTable {
        dates: table.dates[1..].to_vec(),
        tickers: table.tickers.clone(),
        returns,
        market_return,
    }
}

/// One rolling window: estimation span `[start, end)` and its forward span
/// `[forward_start, forward_end)` in return-row indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub forward_start: usize,
    pub forward_end: usize,
    /// Whether the forward span fits inside the data. The persistence
    /// signal is computable either way; the volatility ratio is not.
    pub forward_complete: bool,
}

/// Enumerates rolling windows of length `theta` stepping by `d_t`, each with
/// a forward window of length `theta_forward` starting where it ends.
/// Returns an empty sequence when fewer than `theta` observations exist.
pub fn make_windows(
    t_total: usize,
    theta: usize,
    d_t: usize,
    theta_forward: usize,
) -> Vec<WindowSpec> {
    assert!(theta >= 2, "window length must be at least 2");
    assert!(d_t >= 1, "window shift must be at least 1");
    assert!(theta_forward >= 2, "forward window length must be at least 2");
    let mut windows = Vec::new();
    let mut start = 0;
    while start + theta <= t_total {
        let end = start + theta;
        windows.push(WindowSpec {
            index: windows.len(),
            start,
            end,
            forward_start: end,
            forward_end: end + theta_forward,
            forward_complete: end + theta_forward <= t_total,
        });
        start += d_t;
    }
    windows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const WIDE: &str = "date,AAA,BBB,CCC,DDD\n\
        2020-01-02,10,20,30,40\n\
        2020-01-03,11,19,31,39\n\
        2020-01-06,12,21,29,41\n";

    #[test]
    fn wide_csv_parses() {
        let out = load_prices_from(WIDE.as_bytes(), CsvFormat::Wide).unwrap();
        assert_eq!(out.table.n_assets(), 4);
        assert_eq!(out.table.n_days(), 3);
        assert!(out.dropped.is_empty());
        assert_eq!(out.table.prices[[2, 1]], 21.0);
    }

    #[test]
    fn wide_csv_ten_days_four_tickers() {
        let mut csv = String::from("date,A,B,C,D\n");
        for d in 0..10 {
            csv.push_str(&format!("2020-01-{:02},1,2,3,4\n", d + 1));
        }
        let out = load_prices_from(csv.as_bytes(), CsvFormat::Wide).unwrap();
        assert_eq!(out.table.n_assets(), 4);
        assert_eq!(out.table.n_days(), 10);
    }

    #[test]
    fn non_positive_price_is_dataset_error() {
        let csv = "date,A,B,C,D\n2020-01-02,1,2,3,4\n2020-01-03,1,0,3,4\n";
        let err = load_prices_from(csv.as_bytes(), CsvFormat::Wide).unwrap_err();
        assert!(matches!(err, Error::Dataset(_)), "{err}");
    }

    #[test]
    fn long_csv_missing_date_drops_ticker() {
        let mut csv = String::from("date,ticker,price\n");
        for d in ["2020-01-02", "2020-01-03", "2020-01-06"] {
            for t in ["A", "B", "C", "D", "E"] {
                if d == "2020-01-03" && t == "E" {
                    continue; // E misses one date
                }
                csv.push_str(&format!("{d},{t},10\n"));
            }
        }
        let out = load_prices_from(csv.as_bytes(), CsvFormat::Long).unwrap();
        assert_eq!(out.table.n_assets(), 4);
        assert_eq!(out.dropped, vec!["E".to_owned()]);
    }

    #[test]
    fn duplicate_cell_is_format_error_with_line() {
        let csv = "date,ticker,price\n2020-01-02,A,10\n2020-01-02,A,11\n";
        match load_prices_from(csv.as_bytes(), CsvFormat::Long) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unparseable_price_reports_line() {
        let csv = "date,A,B,C,D\n2020-01-02,1,2,3,4\n2020-01-03,1,x,3,4\n";
        match load_prices_from(csv.as_bytes(), CsvFormat::Wide) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn returns_of_exponential_prices_are_unit() {
        let e = std::f64::consts::E;
        let prices = Array2::from_shape_vec(
            (3, 4),
            vec![
                1.0,
                1.0,
                1.0,
                1.0,
                e,
                1.0,
                1.0,
                1.0,
                e * e,
                1.0,
                1.0,
                1.0,
            ],
        )
        .unwrap();
        let table = PriceTable::new(
            vec!["d1".into(), "d2".into(), "d3".into()],
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            prices,
        )
        .unwrap();
        let ret = compute_returns(&table);
        assert_relative_eq!(ret.returns[[0, 0]], 1.0, max_relative = 1e-12);
        assert_relative_eq!(ret.returns[[1, 0]], 1.0, max_relative = 1e-12);
        assert_eq!(ret.returns[[0, 1]], 0.0);
    }

    #[test]
    fn constant_prices_give_zero_returns_and_market() {
        let prices = Array2::from_elem((5, 4), 42.0);
        let table = PriceTable::new(
            (0..5).map(|d| format!("2020-01-0{}", d + 1)).collect(),
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            prices,
        )
        .unwrap();
        let ret = compute_returns(&table);
        assert!(ret.returns.iter().all(|&r| r == 0.0));
        assert!(ret.market_return.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn antisymmetric_returns_cancel_in_market() {
        // Two pairs of assets with mirrored price paths make the cross
        // section sum to zero at every t.
        let mut prices = Array2::from_elem((6, 4), 1.0);
        let moves = [0.01f64, -0.02, 0.03, 0.015, -0.01];
        for t in 0..5 {
            for i in 0..4 {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                prices[[t + 1, i]] = prices[[t, i]] * (sign * moves[t]).exp();
            }
        }
        let table = PriceTable::new(
            (0..6).map(|d| format!("2020-01-0{}", d + 1)).collect(),
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            prices,
        )
        .unwrap();
        let ret = compute_returns(&table);
        for &m in ret.market_return.iter() {
            assert_relative_eq!(m, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn returns_round_trip_to_prices() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut prices = Array2::zeros((40, 5));
        for i in 0..5 {
            prices[[0, i]] = 100.0 * (1.0 + rng.gen::<f64>());
            for t in 1..40 {
                prices[[t, i]] = prices[[t - 1, i]] * (0.02 * (rng.gen::<f64>() - 0.5)).exp();
            }
        }
        let table = PriceTable::new(
            (0..40).map(|d| format!("2020-02-{:02}", d + 10)).collect(),
            (0..5).map(|i| format!("T{i}")).collect(),
            prices.clone(),
        )
        .unwrap();
        let ret = compute_returns(&table);
        for i in 0..5 {
            let mut p = prices[[0, i]];
            for t in 0..39 {
                p *= ret.returns[[t, i]].exp();
                assert_relative_eq!(p, prices[[t + 1, i]], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn market_return_invariant_under_column_permutation() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let prices = Array2::from_shape_fn((20, 6), |_| 50.0 + 50.0 * rng.gen::<f64>());
        let dates: Vec<String> = (0..20).map(|d| format!("2021-03-{:02}", d + 1)).collect();
        let tickers: Vec<String> = (0..6).map(|i| format!("T{i}")).collect();
        let table = PriceTable::new(dates.clone(), tickers.clone(), prices.clone()).unwrap();
        let perm = [3usize, 0, 5, 1, 4, 2];
        let permuted = Array2::from_shape_fn((20, 6), |(t, i)| prices[[t, perm[i]]]);
        let table_p = PriceTable::new(dates, tickers, permuted).unwrap();
        let (a, b) = (compute_returns(&table), compute_returns(&table_p));
        for t in 0..19 {
            assert_relative_eq!(a.market_return[t], b.market_return[t], epsilon = 1e-15);
        }
    }

    #[test]
    fn windows_step_and_forward_flags() {
        let w = make_windows(20, 10, 5, 5);
        assert_eq!(w.len(), 3);
        assert_eq!(
            w.iter().map(|s| s.start).collect::<Vec<_>>(),
            vec![0, 5, 10]
        );
        assert_eq!(
            w.iter().map(|s| s.forward_complete).collect::<Vec<_>>(),
            vec![true, true, false]
        );
    }

    #[test]
    fn single_window_when_data_exactly_theta() {
        let w = make_windows(10, 10, 5, 5);
        assert_eq!(w.len(), 1);
        assert!(!w[0].forward_complete);
    }

    #[test]
    fn empty_when_data_shorter_than_theta() {
        assert!(make_windows(9, 10, 5, 5).is_empty());
    }

    #[test]
    fn window_count_for_fifteen_years() {
        // Independent enumeration of the stepping rule.
        let (t_total, theta, d_t, theta_fwd) = (3775usize, 1000usize, 5usize, 250usize);
        let mut expected = 0usize;
        let mut expected_complete = 0usize;
        let mut s = 0;
        while s + theta <= t_total {
            expected += 1;
            if s + theta + theta_fwd <= t_total {
                expected_complete += 1;
            }
            s += d_t;
        }
        assert_eq!(expected, 556);
        assert_eq!(expected_complete, 506);

        let w = make_windows(t_total, theta, d_t, theta_fwd);
        assert_eq!(w.len(), expected);
        assert_eq!(
            w.iter().filter(|s| s.forward_complete).count(),
            expected_complete
        );
        // Arithmetic sequence with step d_t, nothing past the data.
        for (k, spec) in w.iter().enumerate() {
            assert_eq!(spec.start, k * d_t);
            assert!(spec.end <= t_total);
        }
    }
}
