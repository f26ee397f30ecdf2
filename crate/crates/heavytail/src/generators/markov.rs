//! Finite-state modulating chains with exactly computable mixing
//! coefficients.
//!
//! For a stationary chain the lag-`m` coefficient is the largest
//! deviation `|P^m(i, B) - pi(B)|` over starting states `i` with positive
//! stationary mass and over all state subsets `B`; a process emitting
//! conditionally independent draws given the state inherits that value as
//! an upper bound. The subset maximization is carried out literally, so
//! the state count is capped at 20 (cost grows as `S * 2^S` per lag).

use crate::bounds::MixingDecay;
use crate::error::{Error, Result};

pub const MAX_STATES: usize = 20;

/// Row-stochastic transition matrix, its stationary law and per-state
/// emission scales.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChainSpec {
    states: usize,
    transition: Vec<f64>, // row-major S x S
    stationary: Vec<f64>,
    emission_scale: Vec<f64>,
}

impl MarkovChainSpec {
    pub fn new(
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
        emission_scale: Vec<f64>,
    ) -> Result<Self> {
        let s = transition.len();
        if s == 0 {
            return Err(Error::invalid("chain needs at least one state"));
        }
        if stationary.len() != s || emission_scale.len() != s {
            return Err(Error::invalid(format!(
                "dimension mismatch: {s} states, {} stationary entries, {} emission scales",
                stationary.len(),
                emission_scale.len()
            )));
        }
        let mut flat = Vec::with_capacity(s * s);
        for (i, row) in transition.iter().enumerate() {
            if row.len() != s {
                return Err(Error::invalid(format!(
                    "transition row {i} has {} entries, expected {s}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::invalid(format!(
                        "transition row {i} has an invalid probability {p}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "transition row {i} sums to {sum}, expected 1 within 1e-12"
                )));
            }
            flat.extend_from_slice(row);
        }
        let pi_sum: f64 = stationary.iter().sum();
        if stationary.iter().any(|&p| !p.is_finite() || p < 0.0) || (pi_sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "stationary vector must be a probability distribution (sum 1 within 1e-12)",
            ));
        }
        // pi P = pi within 1e-10.
        for j in 0..s {
            let mut acc = 0.0;
            for i in 0..s {
                acc += stationary[i] * flat[i * s + j];
            }
            if (acc - stationary[j]).abs() > 1e-10 {
                return Err(Error::invalid(format!(
                    "stationary vector is not invariant: component {j} maps to {acc}, expected {}",
                    stationary[j]
                )));
            }
        }
        if emission_scale.iter().any(|&e| !e.is_finite() || e <= 0.0) {
            return Err(Error::invalid("emission scales must all be finite and > 0"));
        }
        Ok(MarkovChainSpec { states: s, transition: flat, stationary, emission_scale })
    }

    /// Build the spec solving `pi P = pi, sum pi = 1` for the caller.
    /// Fails when the stationary law is not unique (reducible or periodic
    /// corner cases like the identity matrix); supply it explicitly then.
    pub fn with_computed_stationary(
        transition: Vec<Vec<f64>>,
        emission_scale: Vec<f64>,
    ) -> Result<Self> {
        let s = transition.len();
        if s == 0 {
            return Err(Error::invalid("chain needs at least one state"));
        }
        // (P^T - I) pi = 0 with the last equation replaced by sum = 1;
        // Gaussian elimination with partial pivoting.
        let mut a = vec![0.0f64; s * (s + 1)];
        for row in 0..s {
            for col in 0..s {
                let v = if row + 1 == s {
                    1.0
                } else {
                    transition
                        .get(col)
                        .and_then(|r| r.get(row))
                        .copied()
                        .ok_or_else(|| Error::invalid("transition matrix is not square"))?
                        - if row == col { 1.0 } else { 0.0 }
                };
                a[row * (s + 1) + col] = v;
            }
        }
        a[(s - 1) * (s + 1) + s] = 1.0;
        for col in 0..s {
            let pivot_row = (col..s)
                .max_by(|&x, &y| {
                    a[x * (s + 1) + col].abs().partial_cmp(&a[y * (s + 1) + col].abs()).unwrap()
                })
                .unwrap();
            if a[pivot_row * (s + 1) + col].abs() < 1e-12 {
                return Err(Error::invalid(
                    "stationary distribution is not unique; supply it explicitly",
                ));
            }
            if pivot_row != col {
                for k in 0..=s {
                    a.swap(col * (s + 1) + k, pivot_row * (s + 1) + k);
                }
            }
            let pivot = a[col * (s + 1) + col];
            for row in 0..s {
                if row == col {
                    continue;
                }
                let factor = a[row * (s + 1) + col] / pivot;
                for k in col..=s {
                    a[row * (s + 1) + k] -= factor * a[col * (s + 1) + k];
                }
            }
        }
        let mut pi = vec![0.0f64; s];
        for i in 0..s {
            pi[i] = a[i * (s + 1) + s] / a[i * (s + 1) + i];
        }
        if pi.iter().any(|&p| p < -1e-12) {
            return Err(Error::invalid("computed stationary vector has negative mass"));
        }
        for p in &mut pi {
            *p = p.max(0.0);
        }
        let total: f64 = pi.iter().sum();
        for p in &mut pi {
            *p /= total;
        }
        Self::new(transition, pi, emission_scale)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn emission_scale(&self) -> &[f64] {
        &self.emission_scale
    }

    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        (0..self.states)
            .map(|i| self.transition[i * self.states..(i + 1) * self.states].to_vec())
            .collect()
    }

    pub(crate) fn transition_row(&self, i: usize) -> &[f64] {
        &self.transition[i * self.states..(i + 1) * self.states]
    }

    /// Exact lag-`m` mixing coefficient of the state process:
    /// `max_i max_B |P^m(i, B) - pi(B)|` over states with positive
    /// stationary mass and all `2^S` subsets `B`, from exact matrix powers.
    pub fn exact_phi(&self, m: u64) -> Result<f64> {
        if m == 0 {
            return Err(Error::invalid("lag must be >= 1"));
        }
        self.ensure_enumerable()?;
        let power = self.matrix_power(m);
        Ok(self.phi_from_power(&power))
    }

    /// `phi(m)` for every `m` in `1..=horizon`, sharing the power iteration.
    pub fn phi_profile(&self, horizon: u64) -> Result<Vec<f64>> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        self.ensure_enumerable()?;
        let mut out = Vec::with_capacity(horizon as usize);
        let mut power = self.transition.clone();
        out.push(self.phi_from_power(&power));
        for _ in 1..horizon {
            power = self.mat_mul(&power, &self.transition);
            out.push(self.phi_from_power(&power));
        }
        Ok(out)
    }

    fn ensure_enumerable(&self) -> Result<()> {
        if self.states > MAX_STATES {
            return Err(Error::invalid(format!(
                "subset enumeration supports at most {MAX_STATES} states, got {}",
                self.states
            )));
        }
        Ok(())
    }

    fn mat_mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let s = self.states;
        let mut out = vec![0.0; s * s];
        for i in 0..s {
            for k in 0..s {
                let aik = a[i * s + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..s {
                    out[i * s + j] += aik * b[k * s + j];
                }
            }
        }
        out
    }

    fn matrix_power(&self, mut m: u64) -> Vec<f64> {
        let s = self.states;
        let mut result = vec![0.0; s * s];
        for i in 0..s {
            result[i * s + i] = 1.0;
        }
        let mut base = self.transition.clone();
        while m > 0 {
            if m & 1 == 1 {
                result = self.mat_mul(&result, &base);
            }
            m >>= 1;
            if m > 0 {
                base = self.mat_mul(&base, &base);
            }
        }
        result
    }

    /// Subset-sum DP over all masks: `sums[B] = sums[B minus lowest bit] + w[lowest bit]`.
    fn subset_sums(&self, weights: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0f64; 1 << self.states];
        for mask in 1usize..(1 << self.states) {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = sums[mask & (mask - 1)] + weights[low];
        }
        sums
    }

    fn phi_from_power(&self, power: &[f64]) -> f64 {
        let s = self.states;
        let pi_sums = self.subset_sums(&self.stationary);
        let mut worst = 0.0f64;
        for i in 0..s {
            if self.stationary[i] <= 0.0 {
                continue;
            }
            let row_sums = self.subset_sums(&power[i * s..(i + 1) * s]);
            for mask in 0..(1usize << s) {
                let dev = (row_sums[mask] - pi_sums[mask]).abs();
                if dev > worst {
                    worst = dev;
                }
            }
        }
        worst
    }

    /// Modulus of the second-largest eigenvalue of the transition matrix.
    pub fn second_eigenvalue_modulus(&self) -> f64 {
        if self.states < 2 {
            return 0.0;
        }
        let m = nalgebra::DMatrix::from_row_slice(self.states, self.states, &self.transition);
        let mut mods: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
        mods.sort_by(|x, y| y.partial_cmp(x).unwrap());
        mods[1]
    }

    /// Smallest envelope `C (m+1)^-r_target` dominating the exact
    /// coefficients: `C = max_m phi(m) (m+1)^r_target` over the horizon.
    ///
    /// The chain must mix (second eigenvalue modulus < 1) and the horizon
    /// must be long enough that the maximand is already decreasing at its
    /// end; geometric decay of `phi` then keeps every later lag below the
    /// envelope.
    pub fn fit_decay_envelope(&self, r_target: f64, horizon: u64) -> Result<MixingDecay> {
        if horizon < 8 {
            return Err(Error::invalid("horizon must be at least 8"));
        }
        let rho = self.second_eigenvalue_modulus();
        if rho >= 1.0 - 1e-9 {
            return Err(Error::invalid(format!(
                "chain does not mix: second eigenvalue modulus {rho} >= 1"
            )));
        }
        let profile = self.phi_profile(horizon)?;
        let maximand: Vec<f64> = profile
            .iter()
            .enumerate()
            .map(|(idx, phi)| phi * ((idx as f64 + 2.0).powf(r_target)))
            .collect();
        if maximand.iter().all(|&g| g == 0.0) {
            return MixingDecay::new(0.0, r_target);
        }
        let max = maximand_peak_certified(&maximand).ok_or_else(|| {
            Error::invalid(format!(
                "horizon {horizon} too small to certify the envelope: maximand still rising near the end"
            ))
        })?;
        MixingDecay::new(max, r_target)
    }
}

/// Certify that the maximand `phi(m) (m+1)^r` has peaked inside the
/// horizon: the peak is interior, the five lags right after it fall
/// strictly (genuine decline, above any floating noise floor), and the
/// final value has dropped below 1% of the peak. Returns the peak.
///
/// Values far past the peak sit at the matrix-power noise floor (~1e-16)
/// and are not monotone, which is why the check avoids the last lags.
pub(crate) fn maximand_peak_certified(maximand: &[f64]) -> Option<f64> {
    let (argmax, &max) =
        maximand.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    if argmax + 6 > maximand.len() {
        return None;
    }
    let falling = maximand[argmax..argmax + 6].windows(2).all(|w| w[1] < w[0]);
    let settled = maximand[maximand.len() - 1] < 0.01 * max;
    (falling && settled).then_some(max)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_state(stay: f64, scales: (f64, f64)) -> MarkovChainSpec {
        MarkovChainSpec::new(
            vec![vec![stay, 1.0 - stay], vec![1.0 - stay, stay]],
            vec![0.5, 0.5],
            vec![scales.0, scales.1],
        )
        .unwrap()
    }

    #[test]
    fn constructor_validation() {
        assert!(MarkovChainSpec::new(vec![vec![0.8, 0.1]], vec![1.0], vec![1.0]).is_err());
        assert!(MarkovChainSpec::new(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![0.9, 0.1], // not invariant
            vec![1.0, 1.0],
        )
        .is_err());
        assert!(MarkovChainSpec::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
            vec![0.0, 1.0], // bad scale
        )
        .is_err());
        // Identity transition with a uniform stationary vector is accepted.
        assert!(MarkovChainSpec::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
            vec![1.0, 1.0],
        )
        .is_ok());
    }

    #[test]
    fn computed_stationary_matches_hand_solution() {
        // p01 = 0.3, p10 = 0.1 => pi = (0.25, 0.75).
        let chain = MarkovChainSpec::with_computed_stationary(
            vec![vec![0.7, 0.3], vec![0.1, 0.9]],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!((chain.stationary()[0] - 0.25).abs() < 1e-12);
        assert!((chain.stationary()[1] - 0.75).abs() < 1e-12);
        // Identity matrix: no unique stationary law.
        let err = MarkovChainSpec::with_computed_stationary(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 1.0],
        );
        assert!(err.is_err());
    }

    #[test]
    fn exact_phi_closed_form_two_state() {
        // Symmetric stay-0.9 chain: phi(m) = 0.5 * 0.8^m.
        let chain = two_state(0.9, (1.0, 1.0));
        for m in 1..=20u64 {
            let expect = 0.5 * 0.8f64.powi(m as i32);
            let got = chain.exact_phi(m).unwrap();
            assert!((got - expect).abs() < 1e-12, "m={m}: {got} vs {expect}");
        }
        let profile = chain.phi_profile(20).unwrap();
        for (i, &v) in profile.iter().enumerate() {
            assert!((v - chain.exact_phi(i as u64 + 1).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_phi_identity_chain_does_not_mix() {
        // Identity transitions, uniform pi: phi(m) = 0.5 for every m.
        let chain = MarkovChainSpec::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
            vec![1.0, 1.0],
        )
        .unwrap();
        for m in [1u64, 5, 50] {
            assert!((chain.exact_phi(m).unwrap() - 0.5).abs() < 1e-15);
        }
        assert!(chain.fit_decay_envelope(3.0, 100).is_err());
    }

    #[test]
    fn exact_phi_zero_for_rows_equal_to_stationary() {
        let chain = MarkovChainSpec::new(
            vec![vec![0.25, 0.75], vec![0.25, 0.75]],
            vec![0.25, 0.75],
            vec![1.0, 1.0],
        )
        .unwrap();
        for m in [1u64, 3, 10] {
            assert!(chain.exact_phi(m).unwrap() < 1e-15);
        }
        let env = chain.fit_decay_envelope(3.0, 64).unwrap();
        assert_eq!(env.c(), 0.0);
    }

    #[test]
    fn exact_phi_nonincreasing_for_reversible_chains() {
        for stay in [0.9, 0.7] {
            let chain = two_state(stay, (1.0, 1.0));
            let profile = chain.phi_profile(100).unwrap();
            for w in profile.windows(2) {
                assert!(w[1] <= w[0] + 1e-15);
            }
        }
    }

    #[test]
    fn envelope_fit_two_state_hand_value() {
        // max_m 0.5 * 0.8^m (m+1)^3 is about 75.49 near m = 12.
        let chain = two_state(0.9, (1.0, 1.0));
        let env = chain.fit_decay_envelope(3.0, 200).unwrap();
        assert!((env.c() - 75.4884).abs() < 0.01, "C = {}", env.c());
        // Brute-force grid oracle over m <= 200.
        let mut oracle = 0.0f64;
        for m in 1..=200u32 {
            oracle = oracle.max(0.5 * 0.8f64.powi(m as i32) * ((m as f64) + 1.0).powi(3));
        }
        assert!((env.c() - oracle).abs() < 1e-9);
        // Domination over a long horizon.
        let profile = chain.phi_profile(2000).unwrap();
        for (i, &phi) in profile.iter().enumerate() {
            let m = i as f64 + 1.0;
            assert!(phi <= env.c() * (m + 1.0).powf(-3.0) * (1.0 + 1e-12));
        }
        // A looser polynomial needs a smaller scale.
        let env_21 = chain.fit_decay_envelope(2.1, 200).unwrap();
        assert!(env_21.c() < env.c());
    }

    #[test]
    fn envelope_fit_rejects_short_horizon() {
        let chain = two_state(0.995, (1.0, 1.0)); // slow mixing: maximand peaks late
        assert!(chain.fit_decay_envelope(3.0, 10).is_err());
        assert!(chain.fit_decay_envelope(3.0, 4000).is_ok());
    }

    #[test]
    fn state_cap_enforced() {
        let s = 21;
        let row = vec![1.0 / s as f64; s];
        let chain = MarkovChainSpec::new(vec![row.clone(); s], row.clone(), vec![1.0; s]).unwrap();
        assert!(chain.exact_phi(1).is_err());
    }

    #[test]
    fn second_eigenvalue_two_state() {
        let chain = two_state(0.9, (1.0, 1.0));
        assert!((chain.second_eigenvalue_modulus() - 0.8).abs() < 1e-10);
    }
}
