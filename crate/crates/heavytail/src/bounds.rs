//! Deterministic calculator for the concentration-rate constants of a
//! sample mean under polynomially mixing dependence and a finite
//! `(1+alpha)`-th absolute moment.
//!
//! Everything here is a pure function of its arguments: no randomness,
//! no shared state. The naming follows the serialized report keys
//! (`beta`, `gamma`, `lambda`, `kappa`, `a1`, `a2`, ...), which are part
//! of the external interface.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::ops::Range;

use crate::error::{Error, Result};
use crate::report::fmt_f64;

/// Blocking parameter `M`; fixed.
pub const BLOCKING_M: f64 = 2.0;
/// Blocking parameter `epsilon`; fixed.
pub const BLOCKING_EPSILON: f64 = 0.5;

/// Moment-inequality constant for mutually independent data with a finite
/// second moment (the `alpha = 1` limit). Exposed separately because the
/// variational constant [`c_alpha`] is only defined for `alpha < 1`.
pub const C_ALPHA_INDEPENDENT_ALPHA_ONE: f64 = 0.25;

/// Polynomial decay rate of the mixing coefficients, or the distinguished
/// independent case (`r = infinity`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayRate {
    Finite(f64),
    Independent,
}

/// Envelope `phi(m) <= C * (m+1)^(-r)` on the mixing coefficients.
///
/// `C = 0` (or [`DecayRate::Independent`]) means the sequence carries no
/// dependence budget at all; the derived series sum is then zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingDecay {
    c: f64,
    rate: DecayRate,
}

impl MixingDecay {
    /// Envelope with finite rate. Requires `r > 2` and `C >= 0`.
    pub fn new(c: f64, r: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::invalid(format!(
                "envelope scale C must be finite and >= 0, got {c}"
            )));
        }
        if !r.is_finite() || r <= 2.0 {
            return Err(Error::invalid(format!("decay rate r must be finite and > 2, got {r}")));
        }
        Ok(MixingDecay { c, rate: DecayRate::Finite(r) })
    }

    /// The independent case (`r = infinity`; `C` treated as 0).
    pub fn independent() -> Self {
        MixingDecay { c: 0.0, rate: DecayRate::Independent }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn rate(&self) -> DecayRate {
        self.rate
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.rate, DecayRate::Independent)
    }

    /// Series sum `sum_{m>=1} sqrt(C (m+1)^-r) = sqrt(C) * (zeta(r/2) - 1)`.
    ///
    /// Partial summation plus an integral-based (Euler-Maclaurin) tail
    /// estimate; total absolute error is below 1e-10 for any admissible
    /// envelope. Zero for `C = 0` or the independent case.
    pub fn phi_sum(&self) -> f64 {
        match self.rate {
            DecayRate::Independent => 0.0,
            DecayRate::Finite(_) if self.c == 0.0 => 0.0,
            DecayRate::Finite(r) => self.c.sqrt() * zeta_minus_one(r / 2.0),
        }
    }
}

/// `zeta(s) - 1 = sum_{j>=2} j^-s` for `s > 1`.
///
/// Terms up to `j = 63` are summed directly; the remainder is the
/// Euler-Maclaurin tail `N^(1-s)/(s-1) + N^-s/2 + s N^(-s-1)/12 - ...`,
/// whose truncation error at `N = 64` is far below 1e-12 for all `s > 1`.
fn zeta_minus_one(s: f64) -> f64 {
    const N: f64 = 64.0;
    let mut sum = 0.0;
    for j in 2..64u32 {
        sum += f64::from(j).powf(-s);
    }
    let tail = N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s) + s * N.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * N.powf(-s - 3.0) / 720.0;
    sum + tail
}

/// Moment condition: `E|X|^(1+alpha) <= nu_alpha` with `0 < alpha < 1`,
/// and the secondary exponent `0 <= alpha' <= alpha` entering the tail
/// rate `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSpec {
    alpha: f64,
    alpha_prime: f64,
    nu_alpha: f64,
}

impl MomentSpec {
    pub fn new(alpha: f64, alpha_prime: f64, nu_alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !alpha_prime.is_finite() || alpha_prime < 0.0 || alpha_prime > alpha {
            return Err(Error::invalid(format!(
                "alpha' must lie in [0, alpha] = [0, {alpha}], got {alpha_prime}"
            )));
        }
        if !nu_alpha.is_finite() || nu_alpha <= 0.0 {
            return Err(Error::invalid(format!("nu_alpha must be finite and > 0, got {nu_alpha}")));
        }
        Ok(MomentSpec { alpha, alpha_prime, nu_alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_prime(&self) -> f64 {
        self.alpha_prime
    }

    pub fn nu_alpha(&self) -> f64 {
        self.nu_alpha
    }
}

/// Objective whose minimum over `eps > 0` defines `c_alpha`:
///
/// `f(eps) = 2 + eps + (1 + 4 phi) * ((1+eps)/eps)^2 * 4 / (1-alpha)^2`
fn moment_constant_objective(eps: f64, alpha: f64, phi: f64) -> f64 {
    let ratio = (1.0 + eps) / eps;
    2.0 + eps + (1.0 + 4.0 * phi) * ratio * ratio * 4.0 / ((1.0 - alpha) * (1.0 - alpha))
}

/// Variational constant of the tail-sum moment inequality:
/// the minimum of [`moment_constant_objective`] over `eps in (0, 1e4]`.
///
/// A 400-point log-spaced grid brackets the minimum, then golden-section
/// refinement locates it to relative accuracy better than 1e-8. The
/// objective diverges at both ends of the domain and has a unique
/// interior minimum, so the bracket is always valid.
///
/// Rejects `alpha >= 1`; for independent data with finite variance use
/// [`C_ALPHA_INDEPENDENT_ALPHA_ONE`] instead.
pub fn c_alpha(alpha: f64, phi: f64) -> Result<f64> {
    c_alpha_minimizer(alpha, phi).map(|(value, _)| value)
}

/// Same as [`c_alpha`] but also returns the minimizing `eps`.
pub fn c_alpha_minimizer(alpha: f64, phi: f64) -> Result<(f64, f64)> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if alpha >= 1.0 {
        return Err(Error::invalid(
            "alpha >= 1 is outside the variational construction; \
             use C_ALPHA_INDEPENDENT_ALPHA_ONE for independent data with finite variance",
        ));
    }
    if !phi.is_finite() || phi < 0.0 {
        return Err(Error::invalid(format!("phi must be finite and >= 0, got {phi}")));
    }

    const GRID: usize = 400;
    let (lo_ln, hi_ln) = ((1e-6f64).ln(), (1e4f64).ln());
    let grid_eps = |i: usize| (lo_ln + (hi_ln - lo_ln) * i as f64 / (GRID - 1) as f64).exp();

    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..GRID {
        let v = moment_constant_objective(grid_eps(i), alpha, phi);
        if v < best {
            best = v;
            best_i = i;
        }
    }

    let mut a = grid_eps(best_i.saturating_sub(1));
    let mut b = grid_eps((best_i + 1).min(GRID - 1));

    // Golden-section refinement of the bracket.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - (b - a) * INV_PHI;
    let mut x2 = a + (b - a) * INV_PHI;
    let mut f1 = moment_constant_objective(x1, alpha, phi);
    let mut f2 = moment_constant_objective(x2, alpha, phi);
    for _ in 0..200 {
        if (b - a) <= 1e-10 * b {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - (b - a) * INV_PHI;
            f1 = moment_constant_objective(x1, alpha, phi);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + (b - a) * INV_PHI;
            f2 = moment_constant_objective(x2, alpha, phi);
        }
    }
    let eps_star = 0.5 * (a + b);
    Ok((moment_constant_objective(eps_star, alpha, phi), eps_star))
}

/// Every derived constant of the deviation bound, plus the inputs needed
/// to evaluate thresholds at a given sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConstants {
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub phi_sum: f64,
    pub c_alpha: f64,
    pub a1: f64,
    pub a2: f64,
    /// `ln A`; always finite. `A` itself may overflow, see [`RateConstants::a_raw`].
    pub log_a: f64,
    pub delta: f64,
    /// `p = 2 ln(1/delta)`.
    pub p: f64,
    pub c: f64,
    pub c0: f64,
    /// Minimal admissible sample size for the exponential part of the bound.
    pub n0: u64,
    /// Sample size equating the polynomial tail term with `delta/2`.
    /// `None` when `alpha' = alpha` or the decay is independent (the term
    /// is then constant in `n` and the equation has no solution);
    /// `f64::INFINITY` when defined but beyond f64 range.
    pub n1: Option<f64>,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub nu_alpha: f64,
    pub decay: MixingDecay,
}

/// Derive the full constant set from an envelope, a moment condition,
/// a confidence level `delta` and the free exponent constant `c`.
pub fn rate_constants(
    decay: MixingDecay,
    moments: MomentSpec,
    delta: f64,
    c: f64,
) -> Result<RateConstants> {
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::invalid(format!("c must be finite and > 0, got {c}")));
    }

    let alpha = moments.alpha();
    let alpha_prime = moments.alpha_prime();
    let nu = moments.nu_alpha();

    let (beta, gamma, lambda, kappa) = match decay.rate() {
        DecayRate::Finite(r) => {
            let d = (1.0 + alpha) * (1.0 + r);
            ((alpha * r + 1.0) / d, (alpha * r + alpha_prime) / d, (r - 1.0) / d, (alpha + r) / d)
        }
        DecayRate::Independent => {
            let b = alpha / (1.0 + alpha);
            (b, b, 1.0 / (1.0 + alpha), 1.0 / (1.0 + alpha))
        }
    };

    let phi = decay.phi_sum();
    let c_alpha = c_alpha(alpha, phi)?;
    let p = 2.0 * (1.0 / delta).ln();
    let a1 = (3.0 * c * nu * (1.0 + 4.0 * phi)).sqrt();
    let a2 = 2.0 * (c_alpha * nu).powf(1.0 / (1.0 + alpha));
    // C = 0 must short-circuit: 4^r overflows for large r and 0 * inf is NaN.
    let log_a = match decay.rate() {
        DecayRate::Finite(r) if decay.c() > 0.0 => {
            0.25 + std::f64::consts::E.sqrt() * decay.c() * 4f64.powf(r)
        }
        _ => 0.25,
    };
    // 2 A delta^c0 = delta / 2  =>  c0 = 1 + ln(4 A) / ln(1/delta)
    let c0 = 1.0 + (4f64.ln() + log_a) / (p / 2.0);

    // Minimal n with theta*_n <= 2 (p/n)^kappa. Because beta + kappa = 1,
    // the ratio theta*_n / (p/n)^kappa is constant in n: the inequality
    // holds for every n or for none (it reduces to a1 <= 6 nu (1 + 4 phi)).
    // The monotone search below therefore resolves immediately, but stays
    // the definition of record.
    let theta_ratio_ok = |n: f64| -> bool {
        let delta_n = a1 * (p / n).powf(beta);
        let b_n = (n / p).powf(lambda);
        let theta = delta_n / (3.0 * nu * (1.0 + 4.0 * phi) * b_n.powf(1.0 - alpha));
        theta <= 2.0 * (p / n).powf(kappa)
    };
    let n0 = match search_min_n(theta_ratio_ok) {
        Some(n) if n <= 2f64.powi(62) => n as u64,
        _ => {
            return Err(Error::invalid(format!(
                "no sample size admits the blocking optimum: requires \
                 a1 <= 6 nu_alpha (1 + 4 phi), i.e. c <= {}",
                12.0 * nu * (1.0 + 4.0 * phi)
            )))
        }
    };

    // Minimal n with p^-alpha (p/n)^e <= delta/2, e = (alpha - alpha')/(1+r).
    // Undefined when the exponent vanishes. The solution is often far past
    // u64 range, so the search runs on f64-represented integers and
    // saturates to infinity when even f64 cannot hold it.
    let n1 = match decay.rate() {
        DecayRate::Finite(r) if alpha_prime < alpha => {
            let e = (alpha - alpha_prime) / (1.0 + r);
            let tail_ok = |n: f64| p.powf(-alpha) * (p / n).powf(e) <= delta / 2.0;
            Some(search_min_n(tail_ok).unwrap_or(f64::INFINITY))
        }
        _ => None,
    };

    Ok(RateConstants {
        beta,
        gamma,
        lambda,
        kappa,
        phi_sum: phi,
        c_alpha,
        a1,
        a2,
        log_a,
        delta,
        p,
        c,
        c0,
        n0,
        n1,
        alpha,
        alpha_prime,
        nu_alpha: nu,
        decay,
    })
}

/// Minimal `n >= 1` satisfying a monotone predicate (false below, true
/// above), by doubling then bisection. Runs on f64 so that solutions far
/// beyond u64 stay representable; below 2^53 the answer is the exact
/// integer boundary. `None` if doubling overflows without success.
fn search_min_n(pred: impl Fn(f64) -> bool) -> Option<f64> {
    if pred(1.0) {
        return Some(1.0);
    }
    let mut hi = 2.0f64;
    while !pred(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    let mut lo = hi / 2.0; // pred(lo) is false
    while hi - lo > 1.0 && (hi - lo) > 1e-12 * lo {
        let mid = lo + (hi - lo) / 2.0;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(if hi <= 2f64.powi(53) { hi.ceil() } else { hi })
}

impl RateConstants {
    /// `A = exp(log_a)`; overflows to infinity for large envelopes.
    /// The serialized reports treat `log_A` as authoritative.
    pub fn a_raw(&self) -> f64 {
        self.log_a.exp()
    }

    /// Truncation level `b_n = (n/p)^lambda`.
    pub fn truncation_level(&self, n: u64) -> f64 {
        (n as f64 / self.p).powf(self.lambda)
    }

    /// Deviation threshold `a1 (p/n)^beta + a2 (p/n)^gamma`.
    pub fn deviation_threshold(&self, n: u64) -> f64 {
        let base = self.p / n as f64;
        self.a1 * base.powf(self.beta) + self.a2 * base.powf(self.gamma)
    }

    /// Raw probability bound `2 A delta^c + p^-alpha (p/n)^((alpha-alpha')/(1+r))`.
    /// Can exceed 1 (vacuous) when the envelope makes `A` huge.
    pub fn probability_bound_raw(&self, n: u64) -> f64 {
        // 2 A delta^c in log form; ln(delta) = -p/2.
        let exp_term = (2f64.ln() + self.log_a - self.c * self.p / 2.0).exp();
        let e = match self.decay.rate() {
            DecayRate::Finite(r) => (self.alpha - self.alpha_prime) / (1.0 + r),
            DecayRate::Independent => 0.0,
        };
        let tail_term = self.p.powf(-self.alpha) * (self.p / n as f64).powf(e);
        exp_term + tail_term
    }

    /// Probability bound clamped to 1 (the reported form).
    pub fn probability_bound(&self, n: u64) -> f64 {
        self.probability_bound_raw(n).min(1.0)
    }

    /// Optimal exponent argument `theta*_n = delta_n / (3 nu (1+4 phi) b_n^(1-alpha))`
    /// with `delta_n = a1 (p/n)^beta`.
    pub fn theta_star(&self, n: u64) -> f64 {
        let delta_n = self.a1 * (self.p / n as f64).powf(self.beta);
        let b_n = self.truncation_level(n);
        delta_n / (3.0 * self.nu_alpha * (1.0 + 4.0 * self.phi_sum) * b_n.powf(1.0 - self.alpha))
    }

    /// Alternating block partition of `{0..n}` used by the dependent-sum
    /// analysis. Finite decay only.
    pub fn block_partition(&self, n: u64) -> Result<BlockPartition> {
        let r = match self.decay.rate() {
            DecayRate::Finite(r) => r,
            DecayRate::Independent => {
                return Err(Error::invalid("block partition is vacuous for independent data"))
            }
        };
        if n < 2 {
            return Err(Error::invalid(format!("block partition requires n >= 2, got {n}")));
        }
        let nf = n as f64;
        let m_raw = (nf / self.p).powf(1.0 / (r + 1.0)) / (BLOCKING_M * BLOCKING_M);
        let l_raw =
            BLOCKING_M * BLOCKING_M * (1.0 / self.delta).ln() * (nf / self.p).powf(r / (r + 1.0));
        // Round half-up, at least one element per block; l then fills as
        // many disjoint block pairs as fit, so 2 l m <= n always.
        let m = ((m_raw + 0.5).floor() as u64).max(1);
        let l = n / (2 * m);

        let n_us = usize::try_from(n).map_err(|_| Error::invalid("n exceeds usize"))?;
        let m_us = m as usize;
        let mut xi_ranges = Vec::with_capacity(l as usize);
        let mut eta_ranges = Vec::with_capacity(l as usize);
        for i in 0..l as usize {
            let start = 2 * i * m_us;
            xi_ranges.push(start..start + m_us);
            eta_ranges.push(start + m_us..start + 2 * m_us);
        }
        let remainder_range = (2 * l as usize * m_us)..n_us;

        Ok(BlockPartition {
            n,
            m,
            l,
            m_raw,
            l_raw,
            xi_ranges,
            eta_ranges,
            remainder_range,
            block_m: BLOCKING_M,
            epsilon: BLOCKING_EPSILON,
        })
    }

    /// Flat `key = value` report, one line per constant.
    pub fn to_key_value_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("beta", fmt_f64(self.beta));
        kv("gamma", fmt_f64(self.gamma));
        kv("lambda", fmt_f64(self.lambda));
        kv("kappa", fmt_f64(self.kappa));
        kv("phi_sum", fmt_f64(self.phi_sum));
        kv("c_alpha", fmt_f64(self.c_alpha));
        kv("a1", fmt_f64(self.a1));
        kv("a2", fmt_f64(self.a2));
        kv("A_raw", fmt_f64(self.a_raw()));
        kv("log_A", fmt_f64(self.log_a));
        kv("p", fmt_f64(self.p));
        kv("c", fmt_f64(self.c));
        kv("c0", fmt_f64(self.c0));
        kv("n0", self.n0.to_string());
        kv(
            "n1",
            match self.n1 {
                Some(n) => fmt_f64(n),
                None => "undefined".to_string(),
            },
        );
        out
    }

    /// JSON form of the same report.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("constants report serializes")
    }
}

impl Serialize for RateConstants {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use crate::report::raw_json_number as raw;
        let mut st = serializer.serialize_struct("RateConstants", 15)?;
        st.serialize_field("beta", &raw(self.beta))?;
        st.serialize_field("gamma", &raw(self.gamma))?;
        st.serialize_field("lambda", &raw(self.lambda))?;
        st.serialize_field("kappa", &raw(self.kappa))?;
        st.serialize_field("phi_sum", &raw(self.phi_sum))?;
        st.serialize_field("c_alpha", &raw(self.c_alpha))?;
        st.serialize_field("a1", &raw(self.a1))?;
        st.serialize_field("a2", &raw(self.a2))?;
        st.serialize_field("A_raw", &raw(self.a_raw()))?;
        st.serialize_field("log_A", &raw(self.log_a))?;
        st.serialize_field("p", &raw(self.p))?;
        st.serialize_field("c", &raw(self.c))?;
        st.serialize_field("c0", &raw(self.c0))?;
        st.serialize_field("n0", &self.n0)?;
        match self.n1 {
            None => st.serialize_field("n1", &None::<f64>)?,
            Some(v) if v.is_finite() => st.serialize_field("n1", &raw(v))?,
            Some(_) => st.serialize_field("n1", "inf")?,
        }
        st.end()
    }
}

/// Index partition of `{0..n}` into `l` alternating block pairs of length
/// `m` plus a possibly-empty remainder block. Ranges are 0-based and
/// half-open; together they cover `0..n` exactly and are pairwise disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    pub n: u64,
    pub m: u64,
    pub l: u64,
    /// Pre-rounding block length `(1/M^2) (n/p)^(1/(r+1))`.
    pub m_raw: f64,
    /// Pre-rounding pair count `M^2 log(1/delta) (n/p)^(r/(r+1))`;
    /// `m_raw * l_raw = n/2` exactly.
    pub l_raw: f64,
    pub xi_ranges: Vec<Range<usize>>,
    pub eta_ranges: Vec<Range<usize>>,
    pub remainder_range: Range<usize>,
    pub block_m: f64,
    pub epsilon: f64,
}
