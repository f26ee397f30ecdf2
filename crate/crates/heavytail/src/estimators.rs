//! Point estimators: sample mean, main/tail decomposition at a
//! truncation level, truncated empirical mean with a growing threshold,
//! Huber M-estimator and the Hill tail-index estimator.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::{fmt_f64, serde_f64};

/// Neumaier-compensated sum; error stays within a couple of ulps of the
/// exact result regardless of cancellation.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Arithmetic mean with compensated summation.
pub fn sample_mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("sample mean of an empty sequence"));
    }
    Ok(compensated_sum(xs.iter().copied()) / xs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CenteringMode {
    /// Parts are centered by the analytic truncated means, so
    /// `main + tail = x - E[X]` elementwise.
    Analytic,
    /// Raw indicator split: `main + tail = x` elementwise.
    None,
}

/// Split of a sample at truncation level `b` into bounded main parts and
/// tail parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub b: f64,
    pub main_parts: Vec<f64>,
    pub tail_parts: Vec<f64>,
    pub main_avg: f64,
    pub tail_avg: f64,
    pub centering_mode: CenteringMode,
}

/// Decompose each observation into `x 1(|x|<=b)` and `x 1(|x|>b)`,
/// subtracting the supplied analytic truncated means
/// `(mean_inside, mean_outside)` from the respective part when given.
pub fn decompose(xs: &[f64], b: f64, centers: Option<(f64, f64)>) -> Result<Decomposition> {
    if !b.is_finite() || b <= 0.0 {
        return Err(Error::invalid(format!("truncation level must be finite and > 0, got {b}")));
    }
    let (c_in, c_out, mode) = match centers {
        Some((ci, co)) => (ci, co, CenteringMode::Analytic),
        None => (0.0, 0.0, CenteringMode::None),
    };
    let mut main_parts = Vec::with_capacity(xs.len());
    let mut tail_parts = Vec::with_capacity(xs.len());
    for &x in xs {
        if x.abs() <= b {
            main_parts.push(x - c_in);
            tail_parts.push(-c_out);
        } else {
            main_parts.push(-c_in);
            tail_parts.push(x - c_out);
        }
    }
    let n = xs.len() as f64;
    let main_avg =
        if xs.is_empty() { 0.0 } else { compensated_sum(main_parts.iter().copied()) / n };
    let tail_avg =
        if xs.is_empty() { 0.0 } else { compensated_sum(tail_parts.iter().copied()) / n };
    Ok(Decomposition { b, main_parts, tail_parts, main_avg, tail_avg, centering_mode: mode })
}

/// Truncated empirical mean with per-index thresholds
/// `b_k = (b_scale * k / log(1/delta))^(1/(1+alpha))`, `k` starting at 1.
///
/// `b_scale` should dominate the `(1+alpha)`-th absolute moment; that is
/// the caller's responsibility and is not checked (the moment is usually
/// unknown).
pub fn truncated_mean_bubeck(xs: &[f64], b_scale: f64, delta: f64, alpha: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("truncated mean of an empty sequence"));
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !b_scale.is_finite() || b_scale <= 0.0 {
        return Err(Error::invalid(format!("b_scale must be finite and > 0, got {b_scale}")));
    }
    let log_inv = (1.0 / delta).ln();
    let exponent = 1.0 / (1.0 + alpha);
    let kept = xs.iter().enumerate().map(|(i, &x)| {
        let b_k = (b_scale * (i + 1) as f64 / log_inv).powf(exponent);
        if x.abs() <= b_k {
            x
        } else {
            0.0
        }
    });
    Ok(compensated_sum(kept) / xs.len() as f64)
}

/// Huber M-estimate: the root of the nonincreasing score
/// `mu -> sum_k min(H, max(-H, x_k - mu))`.
///
/// Bisection brackets both edges of the root set (the score can be flat at
/// zero) to absolute tolerance 1e-10 and returns the midpoint.
pub fn huber_estimate(xs: &[f64], h: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("huber estimate of an empty sequence"));
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::invalid(format!("huber threshold must be finite and > 0, got {h}")));
    }
    let score = |mu: f64| compensated_sum(xs.iter().map(|&x| (x - mu).clamp(-h, h)));
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::invalid("sample contains non-finite values"));
    }
    let (lo0, hi0) = (min - h, max + h);
    // Monotonicity bracket: every term is +h at lo0 and -h at hi0.
    assert!(score(lo0) > 0.0 && score(hi0) < 0.0, "huber score bracket violated");

    const TOL: f64 = 1e-10;
    // Lower edge of the root set: smallest mu with score(mu) <= 0.
    let (mut lo, mut hi) = (lo0, hi0);
    while hi - lo > TOL {
        let mid = 0.5 * (lo + hi);
        if score(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lower_edge = 0.5 * (lo + hi);
    // Upper edge: largest mu with score(mu) >= 0.
    let (mut lo, mut hi) = (lo0, hi0);
    while hi - lo > TOL {
        let mid = 0.5 * (lo + hi);
        if score(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let upper_edge = 0.5 * (lo + hi);
    Ok(0.5 * (lower_edge + upper_edge))
}

/// Clipping level `(mu_alpha * n / log(2/delta))^(1/(1+alpha))` that pairs
/// with [`huber_estimate`].
pub fn huber_threshold(mu_alpha: f64, n: u64, delta: f64, alpha: f64) -> Result<f64> {
    if !mu_alpha.is_finite() || mu_alpha <= 0.0 {
        return Err(Error::invalid(format!("mu_alpha must be finite and > 0, got {mu_alpha}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok((mu_alpha * n as f64 / (2.0 / delta).ln()).powf(1.0 / (1.0 + alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HillEstimate {
    pub k: usize,
    #[serde(serialize_with = "serde_f64")]
    pub index: f64,
}

/// Hill estimator of the tail index from the top `k+1` order statistics
/// of the magnitudes `|x|`:
/// `index = [ (1/k) sum_{i<=k} log V_(i) - log V_(k+1) ]^(-1)`.
///
/// Magnitudes are used so two-sided tails are treated symmetrically.
pub fn hill_estimate(xs: &[f64], k: usize) -> Result<HillEstimate> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("sample contains non-finite values"));
    }
    let mut magnitudes: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    if k < 1 || k + 1 > magnitudes.len() {
        return Err(Error::invalid(format!(
            "order-statistic count k = {k} out of range 1..{}",
            magnitudes.len().saturating_sub(1)
        )));
    }
    magnitudes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = &magnitudes[..=k];
    if top[k] <= 0.0 {
        return Err(Error::invalid("nonpositive magnitudes among the top k+1 order statistics"));
    }
    let log_next = top[k].ln();
    let mean_log = compensated_sum(top[..k].iter().map(|v| v.ln())) / k as f64;
    let denom = mean_log - log_next;
    if denom <= 0.0 {
        return Err(Error::invalid("degenerate order statistics: top magnitudes are all equal"));
    }
    Ok(HillEstimate { k, index: 1.0 / denom })
}

/// Default order-statistic count for pipelines: `ceil(n^0.6)`, clamped to
/// the valid range.
pub fn hill_default_k(n: usize) -> usize {
    let k = (n as f64).powf(0.6).ceil() as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

/// Flat JSON record `{estimator, n, parameters, value}` for one estimate.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    pub estimator: String,
    pub n: usize,
    pub parameters: BTreeMap<String, String>,
    #[serde(serialize_with = "serde_f64")]
    pub value: f64,
}

impl EstimatorReport {
    pub fn new(
        estimator: &str,
        n: usize,
        parameters: BTreeMap<String, String>,
        value: f64,
    ) -> Self {
        EstimatorReport { estimator: estimator.to_string(), n, parameters, value }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimator report serializes")
    }
}

/// CSV export of a decomposition: header `x,main,tail`, one row per
/// observation.
pub fn write_decomposition_csv<W: Write>(mut w: W, xs: &[f64], d: &Decomposition) -> Result<()> {
    if xs.len() != d.main_parts.len() {
        return Err(Error::invalid("decomposition length does not match the sample"));
    }
    w.write_all(b"x,main,tail\n")?;
    for ((&x, &main), &tail) in xs.iter().zip(&d.main_parts).zip(&d.tail_parts) {
        writeln!(w, "{},{},{}", fmt_f64(x), fmt_f64(main), fmt_f64(tail))?;
    }
    Ok(())
}
