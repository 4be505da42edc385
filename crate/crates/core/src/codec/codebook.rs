use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Role};

/// How a codebook's symbols were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CodebookKind {
    /// iid `Bernoulli(alpha)` bits; bit 1 is the non-innocent input `x1`.
    DmcBernoulli { alpha: f64 },
    /// iid uniform signs; bit 1 is `+amplitude`, bit 0 is `-amplitude`.
    Bpsk { amplitude: f64 },
}

impl CodebookKind {
    pub fn is_dmc(&self) -> bool {
        matches!(self, Self::DmcBernoulli { .. })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::DmcBernoulli { alpha } if !(0.0..=1.0).contains(&alpha) => Err(
                Error::InvalidParameters(format!("input bias {alpha} outside [0, 1]")),
            ),
            Self::Bpsk { amplitude } if !(amplitude >= 0.0 && amplitude.is_finite()) => Err(
                Error::InvalidParameters(format!("amplitude {amplitude} must be non-negative")),
            ),
            _ => Ok(()),
        }
    }
}

/// `M` codewords of length `n`, stored as one bit per symbol in a
/// row-major byte array.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    kind: CodebookKind,
    n: usize,
    seed: u64,
    bits: Vec<u8>,
}

/// A borrowed codeword together with its symbol mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Codeword<'a> {
    pub kind: CodebookKind,
    pub bits: &'a [u8],
}

impl Codeword<'_> {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Channel input value of symbol `i` (`0/1` for DMC, `+-a` for BPSK).
    pub fn symbol(&self, i: usize) -> f64 {
        let b = self.bits[i];
        match self.kind {
            CodebookKind::DmcBernoulli { .. } => b as f64,
            CodebookKind::Bpsk { amplitude } => {
                if b == 1 {
                    amplitude
                } else {
                    -amplitude
                }
            }
        }
    }
}

impl Codebook {
    /// Builds a codebook from explicit rows of bits.
    pub fn from_codewords(kind: CodebookKind, seed: u64, rows: Vec<Vec<u8>>) -> Result<Self> {
        kind.validate()?;
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 {
            return Err(Error::InvalidParameters("codebook needs M >= 1 and n >= 1".into()));
        }
        let mut bits = Vec::with_capacity(rows.len() * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|&b| b > 1) {
                return Err(Error::InvalidParameters("codeword symbols must be bits".into()));
            }
            bits.extend(row);
        }
        Ok(Self {
            kind,
            n,
            seed,
            bits,
        })
    }

    pub(crate) fn from_raw(kind: CodebookKind, n: usize, seed: u64, bits: Vec<u8>) -> Result<Self> {
        kind.validate()?;
        if n == 0 || bits.is_empty() || !bits.len().is_multiple_of(n) {
            return Err(Error::InvalidParameters("codebook needs M >= 1 and n >= 1".into()));
        }
        Ok(Self {
            kind,
            n,
            seed,
            bits,
        })
    }

    /// Single all-`x0` codeword of length `n`.
    pub fn innocent(n: usize) -> Result<Self> {
        Self::from_codewords(CodebookKind::DmcBernoulli { alpha: 0.0 }, 0, vec![vec![0; n]])
    }

    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of codewords `M`.
    pub fn len(&self) -> usize {
        self.bits.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn codeword(&self, w: usize) -> Codeword<'_> {
        Codeword {
            kind: self.kind,
            bits: &self.bits[w * self.n..(w + 1) * self.n],
        }
    }

    /// Number of `x1` symbols in codeword `w`.
    pub fn weight(&self, w: usize) -> usize {
        self.codeword(w).bits.iter().filter(|&&b| b == 1).count()
    }

    /// `||x_w||^2`: the weight for DMC codebooks, `n a^2` for BPSK.
    pub fn power(&self, w: usize) -> f64 {
        match self.kind {
            CodebookKind::DmcBernoulli { .. } => self.weight(w) as f64,
            CodebookKind::Bpsk { amplitude } => self.n as f64 * amplitude * amplitude,
        }
    }

    /// Positions of the `x1` symbols of codeword `w`.
    pub fn support(&self, w: usize) -> Vec<u32> {
        self.codeword(w)
            .bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Sub-codebook with the given codeword indices, or `None` if empty.
    pub fn subset(&self, indices: &[usize]) -> Option<Self> {
        if indices.is_empty() {
            return None;
        }
        let mut bits = Vec::with_capacity(indices.len() * self.n);
        for &w in indices {
            bits.extend_from_slice(self.codeword(w).bits);
        }
        Some(Self {
            kind: self.kind,
            n: self.n,
            seed: self.seed,
            bits,
        })
    }
}

fn check_size(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameters(format!(
            "codebook needs M >= 1 and n >= 1, got M = {m}, n = {n}"
        )));
    }
    Ok(())
}

/// Random codebook with iid symbols.
///
/// Codeword `w` is drawn from its own substream, so the first `m` codewords
/// of a larger codebook with the same seed coincide with this one.
pub fn generate_codebook(kind: CodebookKind, m: usize, n: usize, seed: u64) -> Result<Codebook> {
    check_size(m, n)?;
    let base = rng::trial_seed(seed, Role::Codebook, 0);
    let mut bits = Vec::with_capacity(m * n);
    match kind {
        CodebookKind::DmcBernoulli { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidParameters(format!(
                    "input bias {alpha} must lie in (0, 1)"
                )));
            }
            for w in 0..m {
                let mut r = rng::stream(base, w as u64);
                bits.extend((0..n).map(|_| (r.random::<f64>() < alpha) as u8));
            }
        }
        CodebookKind::Bpsk { amplitude } => {
            if !(amplitude > 0.0 && amplitude.is_finite()) {
                return Err(Error::InvalidParameters(format!(
                    "amplitude {amplitude} must be positive"
                )));
            }
            for w in 0..m {
                let mut r = rng::stream(base, w as u64);
                bits.extend((0..n).map(|_| r.random::<bool>() as u8));
            }
        }
    }
    Ok(Codebook {
        kind,
        n,
        seed,
        bits,
    })
}

/// Codebook whose codewords each carry exactly `weight` `x1` symbols at
/// uniformly random positions.
pub fn generate_constant_weight(m: usize, n: usize, weight: usize, seed: u64) -> Result<Codebook> {
    check_size(m, n)?;
    if weight > n {
        return Err(Error::InvalidParameters(format!(
            "weight {weight} exceeds codeword length {n}"
        )));
    }
    let base = rng::trial_seed(seed, Role::Codebook, 1);
    let mut bits = vec![0u8; m * n];
    for w in 0..m {
        let mut r = rng::stream(base, w as u64);
        for i in index::sample(&mut r, n, weight) {
            bits[w * n + i] = 1;
        }
    }
    Ok(Codebook {
        kind: CodebookKind::DmcBernoulli {
            alpha: weight as f64 / n as f64,
        },
        n,
        seed,
        bits,
    })
}
