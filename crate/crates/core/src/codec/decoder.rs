use serde::{Deserialize, Serialize};

use crate::bounds::{AchievabilityParams, InfoDensityMoments, Reference};
use crate::error::{Error, Result};
use crate::info::{ln_cosh, mixture, BinaryInputChannel};

use super::channel::Symbols;
use super::codebook::{Codebook, CodebookKind};

/// What the decoder does when several codewords pass the threshold in the
/// same slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambiguity {
    /// Declare an erasure immediately.
    #[default]
    Erasure,
    /// Ignore the slot and continue with the next one.
    NextSlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    /// Information-density threshold in nats.
    pub gamma: f64,
    pub reference: Reference,
    #[serde(default)]
    pub ambiguity: Ambiguity,
}

impl DecoderConfig {
    pub fn new(gamma: f64, reference: Reference) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameters(format!("threshold {gamma} must be positive")));
        }
        Ok(Self {
            gamma,
            reference,
            ambiguity: Ambiguity::Erasure,
        })
    }

    pub fn with_ambiguity(mut self, ambiguity: Ambiguity) -> Self {
        self.ambiguity = ambiguity;
        self
    }
}

/// Bob's channel as seen by the decoder.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Dmc(BinaryInputChannel),
    Awgn { sigma2: f64 },
}

/// Outcome of slotted decoding. Slots are 1-based, messages 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Found { message: usize, slot: usize },
    Erasure,
}

/// Per-symbol mean of the decoder's information density, which fixes both
/// the threshold and the message size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RateModel {
    /// Exact moments against the mixture reference on Bob's side.
    Dmc(InfoDensityMoments),
    /// BPSK with power `rho` against the `N(0, sigma_b2)` reference.
    Awgn { rho: f64, sigma_b2: f64 },
}

impl RateModel {
    pub fn per_symbol(&self) -> f64 {
        match *self {
            Self::Dmc(m) => m.mean,
            Self::Awgn { rho, sigma_b2 } => rho / (2.0 * sigma_b2),
        }
    }
}

/// `gamma = (1 - nu1) n E[i]`.
pub fn decoder_threshold(n: u64, nu1: f64, model: &RateModel) -> Result<f64> {
    if !(0.0..1.0).contains(&nu1) {
        return Err(Error::RangeViolation(format!("nu1 = {nu1} must lie in [0, 1)")));
    }
    Ok((1.0 - nu1) * n as f64 * model.per_symbol())
}

/// Message-set size `M = floor(exp((1 - delta1)(1 - nu1) n E[i]))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MessageSize {
    /// `(1 - delta1)(1 - nu1) n E[i]` in nats.
    pub log_m: f64,
}

impl MessageSize {
    /// `floor(e^{log_m})`, at least one, when it fits in a `u64`.
    pub fn count(&self) -> Option<u64> {
        let m = self.log_m.exp().floor();
        (m < u64::MAX as f64).then(|| (m as u64).max(1))
    }
}

pub fn message_size(n: u64, params: &AchievabilityParams, model: &RateModel) -> MessageSize {
    MessageSize {
        log_m: (params.rate_factor() * n as f64 * model.per_symbol()).max(0.0),
    }
}

/// Precomputed per-codeword scoring for one codebook and channel.
#[derive(Debug, Clone)]
pub(crate) enum SlotScorer {
    Dmc {
        /// `ln W(y|x) / R(y)` indexed `[x][y]`.
        table: [Vec<f64>; 2],
        /// Codeword supports when every table entry is finite.
        supports: Option<Vec<Vec<u32>>>,
        bits: Vec<u8>,
        n: usize,
    },
    Awgn {
        signs: Vec<f64>,
        amplitude: f64,
        sigma2: f64,
        reference: Reference,
        n: usize,
    },
}

impl SlotScorer {
    pub fn new(codebook: &Codebook, reference: Reference, model: &ChannelModel) -> Result<Self> {
        let n = codebook.n();
        match (codebook.kind(), model) {
            (CodebookKind::DmcBernoulli { alpha }, ChannelModel::Dmc(ch)) => {
                let r = match reference {
                    Reference::Mixture => mixture(&ch.d0, &ch.d1, alpha)?,
                    Reference::Pure => ch.d0.clone(),
                };
                let row = |d: &crate::info::FiniteDistribution| -> Vec<f64> {
                    d.probs()
                        .iter()
                        .zip(r.probs())
                        .map(|(&w, &q)| if w == 0.0 { f64::NEG_INFINITY } else { (w / q).ln() })
                        .collect()
                };
                let table = [row(&ch.d0), row(&ch.d1)];
                if table.iter().flatten().any(|v| *v == f64::INFINITY) {
                    return Err(Error::AbsoluteContinuityViolation {
                        symbol: table[1].iter().position(|v| *v == f64::INFINITY).unwrap_or(0),
                    });
                }
                let finite = table.iter().flatten().all(|v| v.is_finite());
                let supports = finite.then(|| (0..codebook.len()).map(|w| codebook.support(w)).collect());
                Ok(Self::Dmc {
                    table,
                    supports,
                    bits: codebook.bits().to_vec(),
                    n,
                })
            }
            (CodebookKind::Bpsk { amplitude }, ChannelModel::Awgn { sigma2 }) => {
                if !(*sigma2 > 0.0) {
                    return Err(Error::NonPositiveVariance(*sigma2));
                }
                Ok(Self::Awgn {
                    signs: codebook.bits().iter().map(|&b| if b == 1 { 1.0 } else { -1.0 }).collect(),
                    amplitude,
                    sigma2: *sigma2,
                    reference,
                    n,
                })
            }
            _ => Err(Error::InvalidParameters(
                "codebook kind does not match the channel model".into(),
            )),
        }
    }

    /// Information density of every codeword against one discrete slot.
    pub fn score_binary(&self, y: &[u8], scores: &mut Vec<f64>) {
        let Self::Dmc {
            table,
            supports,
            bits,
            n,
        } = self
        else {
            unreachable!("binary scoring on an AWGN scorer")
        };
        scores.clear();
        match supports {
            Some(supports) => {
                let base: f64 = y.iter().map(|&s| table[0][s as usize]).sum();
                for sup in supports {
                    let delta: f64 = sup
                        .iter()
                        .map(|&i| {
                            let s = y[i as usize] as usize;
                            table[1][s] - table[0][s]
                        })
                        .sum();
                    scores.push(base + delta);
                }
            }
            None => {
                for x in bits.chunks(*n) {
                    scores.push(x.iter().zip(y).map(|(&b, &s)| table[b as usize][s as usize]).sum());
                }
            }
        }
    }

    /// Information density of every codeword against one real slot.
    pub fn score_real(&self, y: &[f64], scores: &mut Vec<f64>) {
        let Self::Awgn {
            signs,
            amplitude,
            sigma2,
            reference,
            n,
        } = self
        else {
            unreachable!("real scoring on a DMC scorer")
        };
        let (a, s2) = (*amplitude, *sigma2);
        // Pure: sum (x y - a^2/2) / s2; Mixture: sum x y / s2 - ln cosh(a y / s2)
        let base = match reference {
            Reference::Pure => -(*n as f64) * a * a / (2.0 * s2),
            Reference::Mixture => -y.iter().map(|&v| ln_cosh(a * v / s2)).sum::<f64>(),
        };
        scores.clear();
        for s in signs.chunks(*n) {
            scores.push(base + a * dot(s, y) / s2);
        }
    }
}

/// Dot product with independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Outcome of examining one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SlotOutcome {
    None,
    Unique(usize),
    Multiple,
}

pub(crate) fn classify(scores: &[f64], gamma: f64) -> SlotOutcome {
    let mut hit = SlotOutcome::None;
    for (w, &s) in scores.iter().enumerate() {
        if s > gamma {
            if hit != SlotOutcome::None {
                return SlotOutcome::Multiple;
            }
            hit = SlotOutcome::Unique(w);
        }
    }
    hit
}

/// Sequential slot-by-slot threshold decoder.
///
/// Slots are examined in order; the first slot in which exactly one
/// codeword's accumulated information density exceeds `gamma` determines
/// the decision. Several qualifying codewords in one slot are handled per
/// [`DecoderConfig::ambiguity`].
pub fn decode_slotted(
    received: &Symbols,
    codebook: &Codebook,
    config: &DecoderConfig,
    model: &ChannelModel,
) -> Result<Decision> {
    let n = codebook.n();
    if received.is_empty() || !received.len().is_multiple_of(n) {
        return Err(Error::LengthMismatch {
            expected: n * (received.len() / n).max(1),
            got: received.len(),
        });
    }
    let scorer = SlotScorer::new(codebook, config.reference, model)?;
    let slots = received.len() / n;
    let mut scores = Vec::with_capacity(codebook.len());
    for t in 1..=slots {
        let r = (t - 1) * n..t * n;
        match received {
            Symbols::Binary(y) => {
                if matches!(scorer, SlotScorer::Awgn { .. }) {
                    return Err(Error::InvalidParameters("AWGN decoder needs real samples".into()));
                }
                scorer.score_binary(&y[r], &mut scores)
            }
            Symbols::Real(y) => {
                if matches!(scorer, SlotScorer::Dmc { .. }) {
                    return Err(Error::InvalidParameters("DMC decoder needs discrete symbols".into()));
                }
                scorer.score_real(&y[r], &mut scores)
            }
        }
        match classify(&scores, config.gamma) {
            SlotOutcome::None => {}
            SlotOutcome::Unique(message) => return Ok(Decision::Found { message, slot: t }),
            SlotOutcome::Multiple => {
                if config.ambiguity == Ambiguity::Erasure {
                    return Ok(Decision::Erasure);
                }
            }
        }
    }
    Ok(Decision::Erasure)
}
