use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::info::BinaryInputChannel;
use crate::rng;

use super::codebook::{CodebookKind, Codeword};

/// Symbols of a length-`N` frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Symbols {
    /// Input bits (0 is `x0`) or discrete output symbol indices.
    Binary(Vec<u8>),
    /// Real-valued channel inputs or outputs.
    Real(Vec<f64>),
}

impl Symbols {
    pub fn len(&self) -> usize {
        match self {
            Self::Binary(v) => v.len(),
            Self::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A codeword placed in slot `slot` (1-based) of `slots` slots of length `n`;
/// every other position carries the innocent symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SlottedFrame {
    pub symbols: Symbols,
    pub slot: usize,
    pub n: usize,
    pub slots: usize,
}

impl SlottedFrame {
    /// Range of frame positions covered by slot `t` (1-based).
    pub fn slot_range(n: usize, t: usize) -> std::ops::Range<usize> {
        (t - 1) * n..t * n
    }

    /// Recovers the symbols of slot `t`.
    pub fn slot_symbols(&self, t: usize) -> Result<Symbols> {
        if t == 0 || t > self.slots {
            return Err(Error::SlotOutOfRange {
                slot: t,
                slots: self.slots,
            });
        }
        let r = Self::slot_range(self.n, t);
        Ok(match &self.symbols {
            Symbols::Binary(v) => Symbols::Binary(v[r].to_vec()),
            Symbols::Real(v) => Symbols::Real(v[r].to_vec()),
        })
    }
}

/// Places `codeword` in slot `t` of an otherwise silent frame.
pub fn embed_in_slot(codeword: Codeword<'_>, t: usize, slots: usize) -> Result<SlottedFrame> {
    if t == 0 || t > slots {
        return Err(Error::SlotOutOfRange { slot: t, slots });
    }
    let n = codeword.len();
    let r = SlottedFrame::slot_range(n, t);
    let symbols = match codeword.kind {
        CodebookKind::DmcBernoulli { .. } => {
            let mut v = vec![0u8; n * slots];
            v[r].copy_from_slice(codeword.bits);
            Symbols::Binary(v)
        }
        CodebookKind::Bpsk { .. } => {
            let mut v = vec![0.0; n * slots];
            for (i, x) in v[r].iter_mut().enumerate() {
                *x = codeword.symbol(i);
            }
            Symbols::Real(v)
        }
    };
    Ok(SlottedFrame {
        symbols,
        slot: t,
        n,
        slots,
    })
}

/// Inverse-CDF sampler for the two output laws of a binary-input channel.
#[derive(Debug, Clone)]
pub(crate) struct OutputSampler {
    cdf: [Vec<f64>; 2],
}

impl OutputSampler {
    pub fn new(channel: &BinaryInputChannel) -> Self {
        let cdf = |d: &crate::info::FiniteDistribution| {
            let mut acc = 0.0;
            let mut c: Vec<f64> = d
                .probs()
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            // guard against the running sum landing just below one
            *c.last_mut().unwrap() = f64::INFINITY;
            c
        };
        Self {
            cdf: [cdf(&channel.d0), cdf(&channel.d1)],
        }
    }

    #[inline]
    pub fn sample(&self, x: u8, rng: &mut ChaCha8Rng) -> u8 {
        let u: f64 = rng.random();
        let c = &self.cdf[(x != 0) as usize];
        c.iter().position(|&v| u < v).unwrap() as u8
    }

    /// Appends the outputs for `inputs` to `out`.
    pub fn pass(&self, inputs: &[u8], rng: &mut ChaCha8Rng, out: &mut Vec<u8>) {
        out.extend(inputs.iter().map(|&x| self.sample(x, rng)));
    }

    /// Appends `n` outputs of the all-`x0` input to `out`.
    pub fn pass_silent(&self, n: usize, rng: &mut ChaCha8Rng, out: &mut Vec<u8>) {
        out.extend((0..n).map(|_| self.sample(0, rng)));
    }
}

/// Appends `inputs + N(0, sigma2)` noise to `out`.
pub(crate) fn awgn_slot(inputs: impl Iterator<Item = f64>, sigma: f64, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    out.extend(inputs.map(|x| x + sigma * rng.sample::<f64, _>(StandardNormal)));
}

/// Passes a binary frame through a discrete memoryless channel.
///
/// Slot `l` (1-based) draws from substream `l - 1` of `seed`, so any slot can
/// be regenerated on its own.
pub fn pass_dmc(frame: &SlottedFrame, channel: &BinaryInputChannel, seed: u64) -> Result<Vec<u8>> {
    let Symbols::Binary(input) = &frame.symbols else {
        return Err(Error::InvalidParameters("DMC input frame must be binary".into()));
    };
    if channel.output_size() > 256 {
        return Err(Error::AlphabetTooLarge(channel.output_size()));
    }
    let sampler = OutputSampler::new(channel);
    let mut out = Vec::with_capacity(input.len());
    for (l, chunk) in input.chunks(frame.n).enumerate() {
        let mut r = rng::stream(seed, l as u64);
        sampler.pass(chunk, &mut r, &mut out);
    }
    Ok(out)
}

/// Adds iid `N(0, sigma2)` noise to a real frame, slot by slot as in
/// [`pass_dmc`]. `sigma2 = 0` returns the input unchanged.
pub fn pass_awgn(frame: &SlottedFrame, sigma2: f64, seed: u64) -> Result<Vec<f64>> {
    let Symbols::Real(input) = &frame.symbols else {
        return Err(Error::InvalidParameters("AWGN input frame must be real".into()));
    };
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::NonPositiveVariance(sigma2));
    }
    let sigma = sigma2.sqrt();
    let mut out = Vec::with_capacity(input.len());
    for (l, chunk) in input.chunks(frame.n).enumerate() {
        let mut r = rng::stream(seed, l as u64);
        awgn_slot(chunk.iter().copied(), sigma, &mut r, &mut out);
    }
    Ok(out)
}
