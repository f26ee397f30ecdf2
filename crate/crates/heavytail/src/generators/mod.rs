//! Reproducible samplers for heavy-tailed i.i.d. and Markov-modulated
//! sequences.
//!
//! A [`GeneratorDescriptor`] pins down a process completely: marginal
//! family, optional modulating chain, seed, and the mixing envelope the
//! caller claims for it. Sampling is counter-based, so a path is a pure
//! function of (descriptor, stream, index): the same inputs give
//! bit-identical output, extending a path keeps its prefix, and distinct
//! replicate streams never share randomness.

pub mod distribution;
pub mod markov;
mod rng;

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::bounds::{DecayRate, MixingDecay};
use crate::error::{Error, Result};
use crate::report::fmt_f64;

pub use distribution::{TailDistribution, TailKind, TruncatedMoments};
pub use markov::{MarkovChainSpec, MAX_STATES};
pub(crate) use rng::derive_stream;
use rng::UniformStream;

const STREAM_INNOVATION: u64 = 0x494E_4E4F;
const STREAM_CHAIN: u64 = 0x4348_4149;

/// Complete, reproducible specification of a sequence generator.
///
/// Without modulation the path is i.i.d. draws from `base` and the
/// declared decay must be the independent envelope. With modulation the
/// path is `X_k = emission_scale[S_k] * W_k + location`, where `S` is a
/// stationary chain path and `W_k` are i.i.d. centered draws from `base`;
/// the declared envelope must dominate the chain's exact mixing
/// coefficients.
///
/// ```
/// use heavytail::generators::{GeneratorDescriptor, TailDistribution, TailKind};
///
/// let base = TailDistribution::new(TailKind::SymmetricPareto, 2.5, 1.0, 0.0)?;
/// let gen = GeneratorDescriptor::iid(base, 42);
/// // Same inputs, same bits; a longer path keeps its prefix.
/// assert_eq!(gen.sample_path(8)?, gen.sample_path(8)?);
/// assert_eq!(gen.sample_path(9)?[..8], gen.sample_path(8)?[..]);
/// # Ok::<(), heavytail::Error>(())
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DescriptorRepr", into = "DescriptorRepr")]
pub struct GeneratorDescriptor {
    base: TailDistribution,
    modulation: Option<MarkovChainSpec>,
    seed: u64,
    declared_decay: MixingDecay,
}

impl GeneratorDescriptor {
    /// Independent draws from `base`.
    pub fn iid(base: TailDistribution, seed: u64) -> Self {
        GeneratorDescriptor {
            base,
            modulation: None,
            seed,
            declared_decay: MixingDecay::independent(),
        }
    }

    /// Markov-modulated process. Verifies that `declared_decay` dominates
    /// the chain's exact coefficients: every checked lag must satisfy
    /// `phi(m) <= C (m+1)^-r`, and the maximand `phi(m) (m+1)^r` must be
    /// falling by the end of the checked horizon so that the chain's
    /// geometric decay keeps all later lags below the envelope.
    pub fn modulated(
        base: TailDistribution,
        chain: MarkovChainSpec,
        seed: u64,
        declared_decay: MixingDecay,
    ) -> Result<Self> {
        let r = match declared_decay.rate() {
            DecayRate::Finite(r) => r,
            DecayRate::Independent => {
                // Only a chain that is already at independence qualifies.
                let profile = chain.phi_profile(64)?;
                if profile.iter().any(|&phi| phi > 1e-14) {
                    return Err(Error::invalid(
                        "declared decay is independent but the chain has nonzero mixing coefficients",
                    ));
                }
                return Ok(GeneratorDescriptor {
                    base,
                    modulation: Some(chain),
                    seed,
                    declared_decay,
                });
            }
        };
        if chain.states() > 1 && chain.second_eigenvalue_modulus() >= 1.0 - 1e-9 {
            return Err(Error::invalid(
                "modulating chain does not mix; no polynomial envelope can dominate it",
            ));
        }
        let mut horizon = 128u64;
        loop {
            let profile = chain.phi_profile(horizon)?;
            for (idx, &phi) in profile.iter().enumerate() {
                let m = idx as f64 + 1.0;
                let envelope = declared_decay.c() * (m + 1.0).powf(-r);
                if phi > envelope * (1.0 + 1e-9) + 1e-15 {
                    return Err(Error::invalid(format!(
                        "declared decay does not dominate the chain: phi({}) = {phi} > {envelope}",
                        idx + 1
                    )));
                }
            }
            let maximand: Vec<f64> = profile
                .iter()
                .enumerate()
                .map(|(idx, phi)| phi * (idx as f64 + 2.0).powf(r))
                .collect();
            let zero = maximand.iter().all(|&g| g == 0.0);
            if zero || markov::maximand_peak_certified(&maximand).is_some() {
                return Ok(GeneratorDescriptor {
                    base,
                    modulation: Some(chain),
                    seed,
                    declared_decay,
                });
            }
            horizon *= 4;
            if horizon > 8192 {
                return Err(Error::invalid(
                    "cannot certify envelope domination within horizon 8192; \
                     the chain mixes too slowly for this envelope",
                ));
            }
        }
    }

    pub fn base(&self) -> &TailDistribution {
        &self.base
    }

    pub fn modulation(&self) -> Option<&MarkovChainSpec> {
        self.modulation.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn declared_decay(&self) -> MixingDecay {
        self.declared_decay
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `E[X_k]`; the same for every position (stationary start).
    pub fn mean(&self) -> f64 {
        match &self.modulation {
            None => self.base.mean(),
            Some(_) => self.base.location(),
        }
    }

    /// Marginal law of one position in state `s` of the modulation.
    fn state_distribution(&self, s: usize) -> Result<TailDistribution> {
        let chain = self.modulation.as_ref().expect("modulated");
        let esc = chain.emission_scale()[s];
        let sc = self.base.scale() * esc;
        let loc = self.base.location() - sc * self.base.standardized_mean();
        TailDistribution::new(self.base.kind(), self.base.tail_exponent(), sc, loc)
    }

    /// Truncated moments of the marginal law (stationary mixture over
    /// states when modulated).
    pub fn marginal_truncated_moments(&self, b: f64) -> Result<TruncatedMoments> {
        match &self.modulation {
            None => self.base.truncated_moments(b),
            Some(chain) => {
                let mut mean_inside = 0.0;
                let mut mean_outside = 0.0;
                let mut second_inside = 0.0;
                for (s, &pi) in chain.stationary().iter().enumerate() {
                    if pi == 0.0 {
                        continue;
                    }
                    let tm = self.state_distribution(s)?.truncated_moments(b)?;
                    mean_inside += pi * tm.mean_inside;
                    mean_outside += pi * tm.mean_outside;
                    second_inside += pi * tm.second_inside;
                }
                Ok(TruncatedMoments { mean_inside, mean_outside, second_inside })
            }
        }
    }

    /// `E|X_k|^s` of the marginal law when a closed form exists.
    pub fn marginal_abs_moment(&self, s: f64) -> Option<f64> {
        match &self.modulation {
            None => self.base.abs_moment(s),
            Some(chain) => {
                if self.base.location() != 0.0 || self.base.standardized_mean() != 0.0 {
                    return None;
                }
                let base_moment = self.base.abs_moment(s)?;
                let mix: f64 = chain
                    .stationary()
                    .iter()
                    .zip(chain.emission_scale())
                    .map(|(&pi, &esc)| pi * esc.powf(s))
                    .sum();
                Some(mix * base_moment)
            }
        }
    }

    pub fn sample_path(&self, n: usize) -> Result<Vec<f64>> {
        self.sample_path_stream(0, n)
    }

    /// Draw `X_1..X_n` on the given replicate stream.
    pub fn sample_path_stream(&self, stream: u64, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::invalid("path length must be >= 1"));
        }
        let sampler = self.base.standardized_sampler();
        let mut innov = UniformStream::new(self.seed, derive_stream(&[stream, STREAM_INNOVATION]));
        let loc = self.base.location();
        let sc = self.base.scale();
        let mut out = Vec::with_capacity(n);
        match &self.modulation {
            None => {
                for _ in 0..n {
                    let u = innov.next_open01();
                    let v = innov.next_open01();
                    out.push(loc + sc * sampler.draw(u, v));
                }
            }
            Some(chain) => {
                let mut states =
                    UniformStream::new(self.seed, derive_stream(&[stream, STREAM_CHAIN]));
                let m1 = self.base.standardized_mean();
                let scales = chain.emission_scale();
                let mut state = pick_state(chain.stationary(), states.next_open01());
                for k in 0..n {
                    if k > 0 {
                        state = pick_state(chain.transition_row(state), states.next_open01());
                    }
                    let u = innov.next_open01();
                    let v = innov.next_open01();
                    let centered = sc * (sampler.draw(u, v) - m1);
                    out.push(scales[state] * centered + loc);
                }
            }
        }
        Ok(out)
    }
}

fn pick_state(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

// ---------------------------------------------------------------------------
// JSON representation: flat fields, `r` either a number or "inf", chain
// stationary vector recomputed on load.

#[derive(Serialize, Deserialize)]
struct DescriptorRepr {
    kind: TailKind,
    tail_exponent: f64,
    scale: f64,
    location: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    emission_scale: Option<Vec<f64>>,
    seed: u64,
    #[serde(rename = "C")]
    c: f64,
    r: RateRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RateRepr {
    Finite(f64),
    Word(String),
}

impl RateRepr {
    fn to_decay(&self, c: f64) -> Result<MixingDecay> {
        match self {
            RateRepr::Finite(r) => MixingDecay::new(c, *r),
            RateRepr::Word(w) if w == "inf" => Ok(MixingDecay::independent()),
            RateRepr::Word(w) => {
                Err(Error::invalid(format!("r must be a number or \"inf\", got {w:?}")))
            }
        }
    }
}

impl TryFrom<DescriptorRepr> for GeneratorDescriptor {
    type Error = Error;

    fn try_from(repr: DescriptorRepr) -> Result<Self> {
        let base = TailDistribution::new(repr.kind, repr.tail_exponent, repr.scale, repr.location)?;
        let decay = repr.r.to_decay(repr.c)?;
        match (repr.transition, repr.emission_scale) {
            (None, None) => {
                if !decay.is_independent() {
                    return Err(Error::invalid(
                        "a generator without modulation must declare r = \"inf\"",
                    ));
                }
                Ok(GeneratorDescriptor::iid(base, repr.seed))
            }
            (Some(transition), Some(emission_scale)) => {
                let chain = MarkovChainSpec::with_computed_stationary(transition, emission_scale)?;
                GeneratorDescriptor::modulated(base, chain, repr.seed, decay)
            }
            _ => Err(Error::invalid("transition and emission_scale must be supplied together")),
        }
    }
}

impl From<GeneratorDescriptor> for DescriptorRepr {
    fn from(g: GeneratorDescriptor) -> Self {
        DescriptorRepr {
            kind: g.base.kind(),
            tail_exponent: g.base.tail_exponent(),
            scale: g.base.scale(),
            location: g.base.location(),
            transition: g.modulation.as_ref().map(|c| c.transition_rows()),
            emission_scale: g.modulation.as_ref().map(|c| c.emission_scale().to_vec()),
            seed: g.seed,
            c: g.declared_decay.c(),
            r: match g.declared_decay.rate() {
                DecayRate::Finite(r) => RateRepr::Finite(r),
                DecayRate::Independent => RateRepr::Word("inf".to_string()),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Single-column CSV interchange for sequences.

/// Write a sequence as CSV with header `x`, one 17-digit value per row.
pub fn write_series_csv<W: Write>(mut w: W, xs: &[f64]) -> Result<()> {
    w.write_all(b"x\n")?;
    for &x in xs {
        w.write_all(fmt_f64(x).as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a sequence written by [`write_series_csv`] (header `x`, one finite
/// value per row).
pub fn read_series_csv<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut lines = BufReader::new(r).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim_end_matches('\r') == "x" => {}
        Some(Ok(h)) => return Err(Error::parse_at(1, format!("expected header \"x\", got {h:?}"))),
        Some(Err(e)) => return Err(e.into()),
        None => return Err(Error::parse("empty input")),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let x: f64 =
            t.parse().map_err(|_| Error::parse_at(i + 2, format!("not a number: {t:?}")))?;
        if !x.is_finite() {
            return Err(Error::parse_at(i + 2, "non-finite value"));
        }
        out.push(x);
    }
    Ok(out)
}
