//! Binary codebook files.
//!
//! Layout (little-endian): magic `CVSL`, version `u8`, kind `u8`
//! (0 = Bernoulli DMC, 1 = BPSK), `M: u32`, `n: u32`, `seed: u64`, the kind
//! parameter as `f64` (input bias or amplitude), then the `M * n` codeword
//! bits packed LSB-first in row-major order, zero-padded to a whole byte.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::codebook::{Codebook, CodebookKind};

const MAGIC: &[u8; 4] = b"CVSL";
const VERSION: u8 = 1;

fn io(e: std::io::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn write_codebook<W: Write>(codebook: &Codebook, mut out: W) -> Result<()> {
    let (kind, param) = match codebook.kind() {
        CodebookKind::DmcBernoulli { alpha } => (0u8, alpha),
        CodebookKind::Bpsk { amplitude } => (1u8, amplitude),
    };
    let m = u32::try_from(codebook.len()).map_err(|_| Error::Format("M exceeds u32".into()))?;
    let n = u32::try_from(codebook.n()).map_err(|_| Error::Format("n exceeds u32".into()))?;
    let mut header = Vec::with_capacity(30);
    header.extend_from_slice(MAGIC);
    header.push(VERSION);
    header.push(kind);
    header.extend_from_slice(&m.to_le_bytes());
    header.extend_from_slice(&n.to_le_bytes());
    header.extend_from_slice(&codebook.seed().to_le_bytes());
    header.extend_from_slice(&param.to_le_bytes());
    out.write_all(&header).map_err(io)?;
    let packed: Vec<u8> = codebook
        .bits()
        .chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << i)))
        .collect();
    out.write_all(&packed).map_err(io)
}

pub fn read_codebook<R: Read>(mut input: R) -> Result<Codebook> {
    let mut header = [0u8; 30];
    input.read_exact(&mut header).map_err(io)?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    if header[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", header[4])));
    }
    let m = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
    let seed = u64::from_le_bytes(header[14..22].try_into().unwrap());
    let param = f64::from_le_bytes(header[22..30].try_into().unwrap());
    let kind = match header[5] {
        0 => CodebookKind::DmcBernoulli { alpha: param },
        1 => CodebookKind::Bpsk { amplitude: param },
        k => return Err(Error::Format(format!("unknown kind {k}"))),
    };
    let total = m
        .checked_mul(n)
        .ok_or_else(|| Error::Format("M * n overflows".into()))?;
    let mut packed = vec![0u8; total.div_ceil(8)];
    input.read_exact(&mut packed).map_err(io)?;
    let bits = (0..total).map(|i| (packed[i / 8] >> (i % 8)) & 1).collect();
    Codebook::from_raw(kind, n, seed, bits)
}
