//! Little-endian encodings of `Φ_k` and adjacency vectors.
//!
//! `Φ_k`: `sensor_id | n | |U| | Ψ hash` as `u64`, the `n` candidate
//! segment indices as `u64`, then `n` rows of `|U|` `f64`, row `i` being
//! `φ` of segment `i`. Adjacency: `K` bits, least significant bit first,
//! zero-padded to whole bytes.

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::coordination::Phi;
use crate::error::{Error, Result};

pub const PHI_HEADER_WORDS: usize = 4;

/// First eight bytes of SHA-256 over the order of `Ψ` and its entries in
/// column-major order.
pub fn psi_hash(psi: &DMatrix<f64>) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update((psi.nrows() as u64).to_le_bytes());
    for v in psi.iter() {
        hasher.update(v.to_le_bytes());
    }
    u64::from_le_bytes(
        hasher.finalize()[..8]
            .try_into()
            .expect("sha256 has 32 bytes"),
    )
}

pub fn encode_phi(phi: &Phi, psi_hash: u64) -> Vec<u8> {
    let (m, n) = phi.vectors.shape();
    let mut out = Vec::with_capacity(8 * (PHI_HEADER_WORDS + n + n * m));
    for word in [phi.sensor as u64, n as u64, m as u64, psi_hash] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    for &s in &phi.segments {
        out.extend_from_slice(&(s as u64).to_le_bytes());
    }
    for i in 0..n {
        for r in 0..m {
            out.extend_from_slice(&phi.vectors[(r, i)].to_le_bytes());
        }
    }
    out
}

/// Decode a `Φ` message computed against the `Ψ` with hash `expected_hash`
/// over a support of `support_len` segments.
pub fn decode_phi(bytes: &[u8], expected_hash: u64, support_len: usize) -> Result<Phi> {
    if !bytes.len().is_multiple_of(8) || bytes.len() < 8 * PHI_HEADER_WORDS {
        return Err(Error::Protocol(format!(
            "phi message of {} bytes is malformed",
            bytes.len()
        )));
    }
    let mut words = bytes
        .chunks_exact(8)
        .map(|c| <[u8; 8]>::try_from(c).expect("8-byte chunk"));
    let mut header = [0u64; PHI_HEADER_WORDS];
    for h in &mut header {
        *h = u64::from_le_bytes(words.next().expect("length checked"));
    }
    let [sensor, n, m, hash] = header;
    if hash != expected_hash {
        return Err(Error::Protocol(format!(
            "phi from sensor {sensor} was computed against psi {hash:#018x}, expected {expected_hash:#018x}"
        )));
    }
    let (n, m) = (n as usize, m as usize);
    if m != support_len {
        return Err(Error::Protocol(format!(
            "phi has |U| = {m}, expected {support_len}"
        )));
    }
    let expected = n
        .checked_mul(m + 1)
        .and_then(|w| w.checked_add(PHI_HEADER_WORDS))
        .and_then(|w| w.checked_mul(8));
    if expected != Some(bytes.len()) {
        return Err(Error::Protocol(format!(
            "phi message has {} bytes for {n} vectors",
            bytes.len()
        )));
    }
    let segments = words
        .by_ref()
        .take(n)
        .map(|w| u64::from_le_bytes(w) as usize)
        .collect();
    let mut vectors = DMatrix::zeros(m, n);
    for i in 0..n {
        for r in 0..m {
            vectors[(r, i)] = f64::from_le_bytes(words.next().expect("length checked"));
        }
    }
    Ok(Phi {
        sensor: sensor as usize,
        segments,
        vectors,
    })
}

pub fn encode_adjacency(row: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; row.len().div_ceil(8)];
    for (i, _) in row.iter().enumerate().filter(|(_, b)| **b) {
        out[i / 8] |= 1 << (i % 8);
    }
    out
}

pub fn decode_adjacency(bytes: &[u8], sensors: usize) -> Result<Vec<bool>> {
    if bytes.len() != sensors.div_ceil(8) {
        return Err(Error::Protocol(format!(
            "adjacency of {} bytes cannot hold exactly {sensors} bits",
            bytes.len()
        )));
    }
    let row: Vec<bool> = (0..sensors)
        .map(|i| bytes[i / 8] >> (i % 8) & 1 == 1)
        .collect();
    if encode_adjacency(&row) != bytes {
        return Err(Error::Protocol("adjacency padding bits are set".into()));
    }
    Ok(row)
}
