//! Exact output laws of tiny instances by brute-force enumeration, and a
//! Monte Carlo estimator of the slot-mixture divergence for AWGN.
//!
//! A sequence `z^N` is keyed by its base-`|Z|` integer encoding with the
//! first symbol most significant.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::codec::{Codebook, CodebookKind};
use crate::error::{Error, Result};
use crate::info::{gaussian_log_ratio, mixture, DmcPair, FiniteDistribution};
use crate::parallel::{fold_trials, Moments};
use crate::rng::{self, Role};

/// Largest number of enumerated sequences.
pub const MAX_SEQUENCES: f64 = 1e8;
/// Largest enumerated frame length `N = n L`.
pub const MAX_FRAME: usize = 26;

/// A tiny slotted instance whose output space can be enumerated.
#[derive(Debug, Clone)]
pub struct ExactInstance {
    n: usize,
    slots: usize,
    channel: DmcPair,
    codebook: Option<Codebook>,
    alpha: f64,
}

impl ExactInstance {
    /// Instance for the ideal slot mixture with input bias `alpha`.
    pub fn mixture(n: usize, slots: usize, channel: DmcPair, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::OutOfRangeAlpha(alpha));
        }
        Self::checked(n, slots, channel, None, alpha)
    }

    /// Instance for the law induced by a DMC codebook.
    pub fn with_codebook(slots: usize, channel: DmcPair, codebook: Codebook) -> Result<Self> {
        let CodebookKind::DmcBernoulli { alpha } = codebook.kind() else {
            return Err(Error::InvalidParameters("exact laws need a DMC codebook".into()));
        };
        Self::checked(codebook.n(), slots, channel, Some(codebook), alpha)
    }

    fn checked(n: usize, slots: usize, channel: DmcPair, codebook: Option<Codebook>, alpha: f64) -> Result<Self> {
        if n == 0 || slots == 0 {
            return Err(Error::InvalidParameters("n and L must be positive".into()));
        }
        let frame = n * slots;
        let size = (channel.q0.len() as f64).powi(frame as i32);
        if frame > MAX_FRAME || size > MAX_SEQUENCES {
            return Err(Error::TooLargeToEnumerate { size });
        }
        Ok(Self {
            n,
            slots,
            channel,
            codebook,
            alpha,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn alphabet(&self) -> usize {
        self.channel.q0.len()
    }

    pub fn channel(&self) -> &DmcPair {
        &self.channel
    }

    pub fn codebook(&self) -> Option<&Codebook> {
        self.codebook.as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Dense probability table over all sequences of a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    alphabet: usize,
    length: usize,
    probs: Vec<f64>,
}

impl ProbTable {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// Sequence length.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Symbols of sequence `index`, first symbol most significant.
    pub fn decode_index(&self, index: usize) -> Vec<u8> {
        decode(index, self.alphabet, self.length)
    }

    /// Index of a symbol sequence.
    pub fn encode(&self, symbols: &[u8]) -> usize {
        symbols.iter().fold(0, |acc, &s| acc * self.alphabet + s as usize)
    }

    /// Probability of the set of sequences selected by `decide`.
    pub fn mass_where(&self, decide: impl Fn(usize) -> bool + Sync) -> f64 {
        self.probs
            .par_iter()
            .enumerate()
            .map(|(i, &p)| if decide(i) { p } else { 0.0 })
            .sum()
    }

    /// Writes `sequence_index,probability` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sequence_index", "probability"])?;
        for (i, p) in self.probs.iter().enumerate() {
            w.write_record([i.to_string(), format!("{p:e}")])?;
        }
        w.flush()
    }
}

fn decode(mut index: usize, alphabet: usize, length: usize) -> Vec<u8> {
    let mut out = vec![0u8; length];
    for slot in out.iter_mut().rev() {
        *slot = (index % alphabet) as u8;
        index /= alphabet;
    }
    out
}

/// `d^{(x) len}` as a table.
pub fn product_law(d: &FiniteDistribution, len: usize) -> Result<ProbTable> {
    let size = (d.len() as f64).powi(len as i32);
    if len > MAX_FRAME || size > MAX_SEQUENCES {
        return Err(Error::TooLargeToEnumerate { size });
    }
    let mut probs = vec![1.0];
    for _ in 0..len {
        probs = probs
            .iter()
            .flat_map(|&p| d.probs().iter().map(move |&q| p * q))
            .collect();
    }
    Ok(ProbTable {
        alphabet: d.len(),
        length: len,
        probs,
    })
}

/// Slot-level law `(1/M) sum_w W^n(. | x_w)` of a codebook on Willie's side.
fn codebook_slot_law(codebook: &Codebook, pair: &DmcPair) -> ProbTable {
    let q = [pair.q0.probs(), pair.q1.probs()];
    let k = pair.q0.len();
    let n = codebook.n();
    let size = k.pow(n as u32);
    let m = codebook.len() as f64;
    let probs = (0..size)
        .map(|s| {
            let z = decode(s, k, n);
            (0..codebook.len())
                .map(|w| {
                    codebook
                        .codeword(w)
                        .bits
                        .iter()
                        .zip(&z)
                        .map(|(&x, &zi)| q[x as usize][zi as usize])
                        .product::<f64>()
                })
                .sum::<f64>()
                / m
        })
        .collect();
    ProbTable {
        alphabet: k,
        length: n,
        probs,
    }
}

/// Idle and active slot laws of an instance.
pub fn exact_slot_laws(instance: &ExactInstance) -> Result<(ProbTable, ProbTable)> {
    let idle = product_law(&instance.channel.q0, instance.n)?;
    let active = match &instance.codebook {
        Some(c) => codebook_slot_law(c, &instance.channel),
        None => {
            let qa = mixture(&instance.channel.q0, &instance.channel.q1, instance.alpha)?;
            product_law(&qa, instance.n)?
        }
    };
    Ok((idle, active))
}

/// `(1/L) sum_t (idle^{t-1} (x) active (x) idle^{L-t})` over `z^N`.
fn slot_mixture(idle: &ProbTable, active: &ProbTable, slots: usize) -> ProbTable {
    let k = idle.alphabet;
    let n = idle.length;
    let slot_size = idle.probs.len();
    let size = slot_size.pow(slots as u32);
    let inv_l = 1.0 / slots as f64;
    let probs = (0..size)
        .into_par_iter()
        .map(|mut z| {
            // slot indices, last slot least significant
            let mut idx = [0usize; MAX_FRAME];
            for l in (0..slots).rev() {
                idx[l] = z % slot_size;
                z /= slot_size;
            }
            let mut prefix = [1.0f64; MAX_FRAME + 1];
            for l in 0..slots {
                prefix[l + 1] = prefix[l] * idle.probs[idx[l]];
            }
            let mut suffix = 1.0;
            let mut sum = 0.0;
            for l in (0..slots).rev() {
                sum += prefix[l] * active.probs[idx[l]] * suffix;
                suffix *= idle.probs[idx[l]];
            }
            sum * inv_l
        })
        .collect();
    ProbTable {
        alphabet: k,
        length: n * slots,
        probs,
    }
}

/// The ideal slot mixture `Q_alpha^N`.
pub fn exact_mixture_law(instance: &ExactInstance) -> Result<ProbTable> {
    if instance.codebook.is_some() {
        return Err(Error::InvalidParameters("instance carries a codebook".into()));
    }
    let (idle, active) = exact_slot_laws(instance)?;
    Ok(slot_mixture(&idle, &active, instance.slots))
}

/// The law `Q_hat^N` induced by a uniform message and a uniform slot.
pub fn exact_induced_law(instance: &ExactInstance) -> Result<ProbTable> {
    if instance.codebook.is_none() {
        return Err(Error::InvalidParameters("instance has no codebook".into()));
    }
    let (idle, active) = exact_slot_laws(instance)?;
    Ok(slot_mixture(&idle, &active, instance.slots))
}

/// `Q0^{(x) N}` for an instance.
pub fn exact_null_law(instance: &ExactInstance) -> Result<ProbTable> {
    product_law(&instance.channel.q0, instance.n * instance.slots)
}

fn check_keys(p: &ProbTable, q: &ProbTable) -> Result<()> {
    if p.alphabet != q.alphabet || p.length != q.length {
        return Err(Error::KeyMismatch);
    }
    Ok(())
}

/// Exact relative entropy between two enumerated laws.
pub fn exact_kl(p: &ProbTable, q: &ProbTable) -> Result<f64> {
    check_keys(p, q)?;
    if let Some(i) = p.probs.iter().zip(&q.probs).position(|(&a, &b)| a > 0.0 && b == 0.0) {
        return Err(Error::AbsoluteContinuityViolation { symbol: i });
    }
    let d: f64 = p
        .probs
        .par_iter()
        .zip(&q.probs)
        .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum();
    Ok(d.max(0.0))
}

/// Exact total variation distance between two enumerated laws.
pub fn exact_tv(p: &ProbTable, q: &ProbTable) -> Result<f64> {
    check_keys(p, q)?;
    Ok(0.5 * p.probs.par_iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// False-alarm and missed-detection probabilities of a deterministic test
/// that declares H1 on the sequences selected by `decide`.
pub fn exact_test_errors(
    h0: &ProbTable,
    h1: &ProbTable,
    decide: impl Fn(usize) -> bool + Sync,
) -> Result<(f64, f64)> {
    check_keys(h0, h1)?;
    let alpha = h0.mass_where(&decide);
    let beta = h1.mass_where(|i| !decide(i));
    Ok((alpha, beta))
}

/// Monte Carlo estimate of `D(q_rho^N || q_0^{(x) N})` for BPSK with power
/// `rho` in a uniformly chosen slot.
///
/// Returns `(estimate, std_error)`.
pub fn mc_kl_awgn(n: usize, slots: usize, rho: f64, sigma_w2: f64, trials: u64, seed: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::NonPositiveTrials);
    }
    if trials < 10_000 {
        return Err(Error::InvalidParameters(format!(
            "at least 10^4 trials required, got {trials}"
        )));
    }
    if n == 0 || slots == 0 {
        return Err(Error::InvalidParameters("n and L must be positive".into()));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveArgument("rho"));
    }
    if !(sigma_w2 > 0.0 && sigma_w2.is_finite()) {
        return Err(Error::NonPositiveVariance(sigma_w2));
    }
    let a = rho.sqrt();
    let sigma = sigma_w2.sqrt();
    let ln_l = (slots as f64).ln();
    let base = rng::derive(seed, Role::Divergence as u64);
    let m: Moments = fold_trials(trials, |i, acc: &mut Moments| {
        let mut r = rng::stream(base, i);
        let t = r.random_range(0..slots);
        let mut per_slot = Vec::with_capacity(slots);
        for l in 0..slots {
            let mut s = 0.0;
            for _ in 0..n {
                let mut z = sigma * r.sample::<f64, _>(StandardNormal);
                if l == t {
                    z += if r.random::<bool>() { a } else { -a };
                }
                s += gaussian_log_ratio(z, a, sigma_w2);
            }
            per_slot.push(s);
        }
        let max = per_slot.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + per_slot.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        acc.push(lse - ln_l);
    });
    Ok((m.mean(), m.std_error()))
}
