//! Real-data pipeline: price CSV to log returns, a portmanteau
//! dependence diagnostic, and a tail-index sensitivity curve.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::estimators::{compensated_sum, hill_estimate, sample_mean, HillEstimate};
use crate::report::{fmt_f64, serde_f64};

/// Validated date/close series: ISO-8601 dates, strictly increasing,
/// positive closes, at least two rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<String>,
    closes: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<String>, closes: Vec<f64>) -> Result<Self> {
        if dates.len() != closes.len() {
            return Err(Error::invalid("dates and closes differ in length"));
        }
        if dates.len() < 2 {
            return Err(Error::invalid("fewer than 2 rows"));
        }
        let mut prev: Option<NaiveDate> = None;
        for (i, (date, &close)) in dates.iter().zip(&closes).enumerate() {
            let row = i + 1;
            let parsed = NaiveDate::parse_from_str(date, "%Y-%m-%d")
                .map_err(|_| Error::parse_at(row, format!("invalid ISO-8601 date {date:?}")))?;
            if let Some(p) = prev {
                if parsed == p {
                    return Err(Error::parse_at(row, format!("duplicate date {date:?}")));
                }
                if parsed < p {
                    return Err(Error::parse_at(row, format!("out-of-order date {date:?}")));
                }
            }
            prev = Some(parsed);
            if !close.is_finite() || close <= 0.0 {
                return Err(Error::parse_at(row, format!("nonpositive close {close}")));
            }
        }
        Ok(PriceSeries { dates, closes })
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }
}

/// Parse a `date,close` CSV into a validated series.
///
/// Rows are reported 1-based (the header is row 0) in error messages.
pub fn parse_prices<R: Read>(input: R) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    {
        let headers = reader.headers().map_err(|e| Error::parse(e.to_string()))?;
        let fields: Vec<&str> = headers.iter().map(str::trim).collect();
        if fields != ["date", "close"] {
            return Err(Error::parse(format!(
                "expected header \"date,close\", got {:?}",
                fields.join(",")
            )));
        }
    }
    let mut dates = Vec::new();
    let mut closes = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::parse_at(row, e.to_string()))?;
        if record.len() != 2 {
            return Err(Error::parse_at(row, format!("expected 2 fields, got {}", record.len())));
        }
        let date = record[0].trim().to_string();
        let close: f64 = record[1].trim().parse().map_err(|_| {
            Error::parse_at(row, format!("close is not a number: {:?}", &record[1]))
        })?;
        dates.push(date);
        closes.push(close);
    }
    PriceSeries::new(dates, closes)
}

/// Inverse of [`parse_prices`] up to number formatting: the written file
/// parses back to an equal series.
pub fn write_prices_csv<W: Write>(mut w: W, series: &PriceSeries) -> Result<()> {
    w.write_all(b"date,close\n")?;
    for (date, &close) in series.dates().iter().zip(series.closes()) {
        writeln!(w, "{date},{}", fmt_f64(close))?;
    }
    Ok(())
}

/// Log returns in percent: `100 log(Y_k / Y_(k-1))`, length `n - 1`.
pub fn log_returns(series: &PriceSeries) -> Vec<f64> {
    series.closes().windows(2).map(|w| 100.0 * (w[1] / w[0]).ln()).collect()
}

/// Ljung-Box portmanteau statistic and its chi-square tail probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LjungBox {
    pub lags: usize,
    #[serde(serialize_with = "serde_f64")]
    pub statistic: f64,
    #[serde(serialize_with = "serde_f64")]
    pub p_value: f64,
}

/// Portmanteau test of serial dependence over lags `1..=max_lag`:
/// `Q = n (n+2) sum_h rho_h^2 / (n-h)`, with the p-value from the upper
/// regularized incomplete gamma (chi-square tail, absolute error below
/// 1e-10).
pub fn dependence_diagnostic(xs: &[f64], max_lag: usize) -> Result<LjungBox> {
    let n = xs.len();
    if max_lag == 0 {
        return Err(Error::invalid("max_lag must be >= 1"));
    }
    if max_lag + 1 >= n {
        return Err(Error::invalid(format!(
            "series of length {n} is too short for max_lag {max_lag}"
        )));
    }
    let mean = sample_mean(xs)?;
    let centered: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let denom = compensated_sum(centered.iter().map(|d| d * d));
    if denom <= 0.0 {
        return Err(Error::invalid("zero variance: autocorrelation undefined"));
    }
    let nf = n as f64;
    let mut q = 0.0;
    for h in 1..=max_lag {
        let num = compensated_sum((0..n - h).map(|t| centered[t] * centered[t + h]));
        let rho = num / denom;
        q += rho * rho / (nf - h as f64);
    }
    q *= nf * (nf + 2.0);
    Ok(LjungBox { lags: max_lag, statistic: q, p_value: chi_square_sf(max_lag as f64, q) })
}

/// Chi-square survival function `P(X > x)` with `df` degrees of freedom.
pub(crate) fn chi_square_sf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df / 2.0, x / 2.0)
}

/// Full analysis record for one return series.
#[derive(Debug, Clone, Serialize)]
pub struct DataReport {
    pub n: usize,
    #[serde(serialize_with = "serde_f64")]
    pub mean_return: f64,
    pub hill: Vec<HillEstimate>,
    pub ljung_box: LjungBox,
}

impl DataReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("data report serializes")
    }
}

/// Run the return-series analysis: mean, Hill sensitivity curve over
/// `k_grid`, and the dependence diagnostic. Grid entries that are not
/// usable for this series (out of range, degenerate order statistics)
/// are skipped; at least one must succeed.
pub fn analyze_returns(returns: &[f64], k_grid: &[usize], max_lag: usize) -> Result<DataReport> {
    if returns.is_empty() {
        return Err(Error::invalid("no returns to analyze"));
    }
    let mean_return = sample_mean(returns)?;
    let mut hill = Vec::new();
    for &k in k_grid {
        if let Ok(est) = hill_estimate(returns, k) {
            hill.push(est);
        }
    }
    if hill.is_empty() {
        return Err(Error::invalid("no usable k in the Hill grid for this series"));
    }
    let ljung_box = dependence_diagnostic(returns, max_lag)?;
    Ok(DataReport { n: returns.len(), mean_return, hill, ljung_box })
}
