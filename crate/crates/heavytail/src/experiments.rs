//! Deterministic, replicated Monte Carlo studies of the deviation bound
//! and of the main/tail convergence rates.
//!
//! Replicates are independent work units keyed by
//! `(master_seed, n, replicate index)`; they may run on any number of
//! worker threads, and the merge is an index-ordered reduction, so a
//! configuration always produces bit-identical reports regardless of the
//! worker count.

use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use std::io::Write;

use crate::bounds::{rate_constants, MomentSpec, RateConstants};
use crate::error::{Error, Result};
use crate::estimators::{compensated_sum, decompose, sample_mean};
use crate::generators::{derive_stream, GeneratorDescriptor, TruncatedMoments};
use crate::report::fmt_f64;

/// Full specification of one deviation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigRepr", into = "ConfigRepr")]
pub struct ExperimentConfig {
    pub generator: GeneratorDescriptor,
    pub moments: MomentSpec,
    pub delta: f64,
    pub c: f64,
    pub n_grid: Vec<u64>,
    pub replicates: u64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn new(
        generator: GeneratorDescriptor,
        moments: MomentSpec,
        delta: f64,
        c: f64,
        n_grid: Vec<u64>,
        replicates: u64,
        master_seed: u64,
    ) -> Result<Self> {
        if n_grid.is_empty() {
            return Err(Error::invalid("n_grid must be nonempty"));
        }
        if n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("n_grid must be strictly increasing"));
        }
        if n_grid[0] < 2 {
            return Err(Error::invalid("n_grid values must be >= 2"));
        }
        if replicates == 0 {
            return Err(Error::invalid("replicates must be >= 1"));
        }
        // The declared moment condition must actually hold for the
        // generator's marginal law.
        generator.base().ensure_moment(moments.alpha())?;
        if let Some(actual) = generator.marginal_abs_moment(1.0 + moments.alpha()) {
            if !actual.is_finite() {
                return Err(Error::invalid("the (1+alpha)-th marginal moment diverges"));
            }
            if moments.nu_alpha() < actual - 1e-9 {
                return Err(Error::invalid(format!(
                    "nu_alpha = {} understates the marginal moment E|X|^(1+alpha) = {actual}",
                    moments.nu_alpha()
                )));
            }
        }
        Ok(ExperimentConfig { generator, moments, delta, c, n_grid, replicates, master_seed })
    }

    /// Derived rate constants for this configuration.
    pub fn constants(&self) -> Result<RateConstants> {
        rate_constants(self.generator.declared_decay(), self.moments, self.delta, self.c)
    }
}

// JSON mirror; `c` accepts a number or the word "c0".
#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    generator: GeneratorDescriptor,
    moments: MomentsRepr,
    delta: f64,
    c: CRepr,
    n_grid: Vec<u64>,
    replicates: u64,
    master_seed: u64,
}

#[derive(Serialize, Deserialize)]
struct MomentsRepr {
    alpha: f64,
    alpha_prime: f64,
    nu_alpha: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CRepr {
    Number(f64),
    Word(String),
}

impl TryFrom<ConfigRepr> for ExperimentConfig {
    type Error = Error;

    fn try_from(repr: ConfigRepr) -> Result<Self> {
        let moments =
            MomentSpec::new(repr.moments.alpha, repr.moments.alpha_prime, repr.moments.nu_alpha)?;
        let c = match repr.c {
            CRepr::Number(c) => c,
            CRepr::Word(w) if w == "c0" => {
                // c0 does not depend on c, so any valid placeholder works.
                rate_constants(repr.generator.declared_decay(), moments, repr.delta, 1.0)?.c0
            }
            CRepr::Word(w) => {
                return Err(Error::invalid(format!("c must be a number or \"c0\", got {w:?}")))
            }
        };
        ExperimentConfig::new(
            repr.generator,
            moments,
            repr.delta,
            c,
            repr.n_grid,
            repr.replicates,
            repr.master_seed,
        )
    }
}

impl From<ExperimentConfig> for ConfigRepr {
    fn from(cfg: ExperimentConfig) -> Self {
        ConfigRepr {
            generator: cfg.generator,
            moments: MomentsRepr {
                alpha: cfg.moments.alpha(),
                alpha_prime: cfg.moments.alpha_prime(),
                nu_alpha: cfg.moments.nu_alpha(),
            },
            delta: cfg.delta,
            c: CRepr::Number(cfg.c),
            n_grid: cfg.n_grid,
            replicates: cfg.replicates,
            master_seed: cfg.master_seed,
        }
    }
}

/// Anything that can hand out replicate paths plus the marginal facts the
/// decomposition needs. Implemented by [`GeneratorDescriptor`]; tests use
/// degenerate sources.
pub(crate) trait PathSource: Sync {
    fn mean(&self) -> f64;
    fn truncated(&self, b: f64) -> Result<TruncatedMoments>;
    fn draw(&self, stream: u64, n: usize) -> Result<Vec<f64>>;
}

impl PathSource for GeneratorDescriptor {
    fn mean(&self) -> f64 {
        GeneratorDescriptor::mean(self)
    }

    fn truncated(&self, b: f64) -> Result<TruncatedMoments> {
        self.marginal_truncated_moments(b)
    }

    fn draw(&self, stream: u64, n: usize) -> Result<Vec<f64>> {
        self.sample_path_stream(stream, n)
    }
}

/// Per-`n` outcome of the deviation study.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: u64,
    /// Fraction of replicates whose absolute mean error reached the
    /// deviation threshold.
    pub exceedance: f64,
    /// Clamped probability bound at this `n`.
    pub bound: f64,
    /// L^(1+alpha) replicate norm of the main-part average.
    pub main_norm: f64,
    /// L^(1+alpha) replicate norm of the tail-part average.
    pub tail_norm: f64,
    /// Deviation threshold evaluated at this `n`.
    pub threshold: f64,
    /// True when `n` is below the admissible sample size `n0`.
    pub below_n0: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Report of one deviation study: one row per `n`, fitted log-log slopes
/// of the replicate norms, and the constants the thresholds came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<RateRow>,
    pub main_fit: Option<RateFit>,
    pub tail_fit: Option<RateFit>,
    pub constants: RateConstants,
}

/// Run the deviation study sequentially.
pub fn run_deviation_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_deviation_experiment_jobs(cfg, None)
}

/// Run the deviation study on a worker pool of the given size. The report
/// is byte-identical for every worker count.
pub fn run_deviation_experiment_jobs(
    cfg: &ExperimentConfig,
    jobs: Option<usize>,
) -> Result<ExperimentReport> {
    let constants = cfg.constants()?;
    run_deviation_core(cfg, &constants, &cfg.generator, jobs)
}

pub(crate) fn run_deviation_core<S: PathSource>(
    cfg: &ExperimentConfig,
    constants: &RateConstants,
    source: &S,
    jobs: Option<usize>,
) -> Result<ExperimentReport> {
    let exponent = 1.0 + cfg.moments.alpha();
    let mu = source.mean();
    let run = || -> Result<Vec<RateRow>> {
        let mut rows = Vec::with_capacity(cfg.n_grid.len());
        for &n in &cfg.n_grid {
            let b_n = constants.truncation_level(n);
            let tm = source.truncated(b_n)?;
            let threshold = constants.deviation_threshold(n);
            let stats: Vec<(bool, f64, f64)> = (0..cfg.replicates)
                .into_par_iter()
                .map(|j| -> Result<(bool, f64, f64)> {
                    let stream = derive_stream(&[cfg.master_seed, n, j]);
                    let path = source.draw(stream, n as usize)?;
                    let err = (sample_mean(&path)? - mu).abs();
                    let d = decompose(&path, b_n, Some((tm.mean_inside, tm.mean_outside)))?;
                    Ok((
                        err >= threshold,
                        d.main_avg.abs().powf(exponent),
                        d.tail_avg.abs().powf(exponent),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            // Index-ordered reduction keeps the result independent of
            // scheduling.
            let r = cfg.replicates as f64;
            let exceed = stats.iter().filter(|s| s.0).count() as f64 / r;
            let main_norm = (compensated_sum(stats.iter().map(|s| s.1)) / r).powf(1.0 / exponent);
            let tail_norm = (compensated_sum(stats.iter().map(|s| s.2)) / r).powf(1.0 / exponent);
            rows.push(RateRow {
                n,
                exceedance: exceed,
                bound: constants.probability_bound(n),
                main_norm,
                tail_norm,
                threshold,
                below_n0: n < constants.n0,
            });
        }
        Ok(rows)
    };

    let rows = match jobs {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
            pool.install(run)?
        }
        None => run()?,
    };

    let fit_of = |norms: Vec<f64>| -> Option<RateFit> {
        if norms.len() >= 3 && norms.iter().all(|&v| v > 0.0) {
            fit_rate(&cfg.n_grid, &norms).ok()
        } else {
            None
        }
    };
    let main_fit = fit_of(rows.iter().map(|r| r.main_norm).collect());
    let tail_fit = fit_of(rows.iter().map(|r| r.tail_norm).collect());

    Ok(ExperimentReport { rows, main_fit, tail_fit, constants: constants.clone() })
}

/// Ordinary least squares of `log(norm)` on `log(n)`; the slope is the
/// fitted convergence exponent.
pub fn fit_rate(ns: &[u64], norms: &[f64]) -> Result<RateFit> {
    if ns.len() != norms.len() {
        return Err(Error::invalid("sample sizes and norms differ in length"));
    }
    if ns.len() < 3 {
        return Err(Error::invalid("rate fitting needs at least 3 points"));
    }
    if !norms.iter().all(|&v| v.is_finite() && v > 0.0) {
        return Err(Error::invalid("norms must all be positive and finite"));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|&v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("sample sizes are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sst: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = intercept + slope * x;
            (y - fit) * (y - fit)
        })
        .sum();
    let r2 = if sst == 0.0 { 1.0 } else { 1.0 - ssr / sst };
    Ok(RateFit { slope, intercept, r2 })
}

/// Monte Carlo check of the tail-sum moment inequality at one sample
/// size: the replicate average of `|sum_k Z_k(b_n)|^(1+alpha)` against
/// `2^(1+alpha) c_alpha nu_alpha n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMomentCheck {
    pub empirical_moment: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn tail_moment_check(cfg: &ExperimentConfig, n: u64) -> Result<TailMomentCheck> {
    let constants = cfg.constants()?;
    tail_moment_core(cfg, &constants, &cfg.generator, n)
}

pub(crate) fn tail_moment_core<S: PathSource>(
    cfg: &ExperimentConfig,
    constants: &RateConstants,
    source: &S,
    n: u64,
) -> Result<TailMomentCheck> {
    let exponent = 1.0 + cfg.moments.alpha();
    let b_n = constants.truncation_level(n);
    let tm = source.truncated(b_n)?;
    let powers: Vec<f64> = (0..cfg.replicates)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let stream = derive_stream(&[cfg.master_seed, n, j]);
            let path = source.draw(stream, n as usize)?;
            let d = decompose(&path, b_n, Some((tm.mean_inside, tm.mean_outside)))?;
            Ok((d.tail_avg * n as f64).abs().powf(exponent))
        })
        .collect::<Result<Vec<_>>>()?;
    let empirical = compensated_sum(powers.iter().copied()) / cfg.replicates as f64;
    let bound = 2f64.powf(exponent) * constants.c_alpha * cfg.moments.nu_alpha() * n as f64;
    Ok(TailMomentCheck { empirical_moment: empirical, bound, pass: empirical <= bound })
}

// ---------------------------------------------------------------------------
// Serialization.

impl Serialize for RateRow {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use crate::report::raw_json_number as raw;
        let mut st = serializer.serialize_struct("RateRow", 7)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("exceedance", &raw(self.exceedance))?;
        st.serialize_field("bound", &raw(self.bound))?;
        st.serialize_field("main_norm", &raw(self.main_norm))?;
        st.serialize_field("tail_norm", &raw(self.tail_norm))?;
        st.serialize_field("threshold", &raw(self.threshold))?;
        st.serialize_field("below_n0", &self.below_n0)?;
        st.end()
    }
}

impl ExperimentReport {
    /// JSON form: rows, fitted slopes (null when not fittable) and the
    /// constants report.
    pub fn to_json_string(&self) -> String {
        #[derive(Serialize)]
        struct Repr<'a> {
            rows: &'a [RateRow],
            #[serde(serialize_with = "crate::report::serde_opt_f64")]
            fitted_main_slope: Option<f64>,
            #[serde(serialize_with = "crate::report::serde_opt_f64")]
            fitted_main_r2: Option<f64>,
            #[serde(serialize_with = "crate::report::serde_opt_f64")]
            fitted_tail_slope: Option<f64>,
            #[serde(serialize_with = "crate::report::serde_opt_f64")]
            fitted_tail_r2: Option<f64>,
            constants: &'a RateConstants,
        }
        serde_json::to_string_pretty(&Repr {
            rows: &self.rows,
            fitted_main_slope: self.main_fit.map(|f| f.slope),
            fitted_main_r2: self.main_fit.map(|f| f.r2),
            fitted_tail_slope: self.tail_fit.map(|f| f.slope),
            fitted_tail_r2: self.tail_fit.map(|f| f.r2),
            constants: &self.constants,
        })
        .expect("experiment report serializes")
    }

    /// Rate table CSV with header `n,exceedance,bound,main_norm,tail_norm`.
    pub fn write_rate_table_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"n,exceedance,bound,main_norm,tail_norm\n")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.n,
                fmt_f64(row.exceedance),
                fmt_f64(row.bound),
                fmt_f64(row.main_norm),
                fmt_f64(row.tail_norm)
            )?;
        }
        Ok(())
    }
}
