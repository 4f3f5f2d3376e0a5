//! Fixed-width little-endian encoding of local summaries.
//!
//! Layout, 8 bytes per word:
//! `version | sensor_id | |U| | support hash | obs_count` as `u64`, then
//! `ż` (`|U|` × `f64`), then the lower triangle of `Σ̇` row by row
//! (`Σ̇[0,0], Σ̇[1,0], Σ̇[1,1], ...`).

use nalgebra::{DMatrix, DVector};

use super::summary::{summary_message_size, LocalSummary, SupportSet};
use crate::error::{Error, Result};

pub const SUMMARY_SCHEMA_VERSION: u64 = 1;
pub const SUMMARY_HEADER_WORDS: usize = 5;

pub fn encode_summary(summary: &LocalSummary) -> Vec<u8> {
    let m = summary.support_len();
    let size = summary_message_size(m);
    let mut out = Vec::with_capacity(8 * size.total_words());
    for word in [
        SUMMARY_SCHEMA_VERSION,
        summary.sensor_id,
        m as u64,
        summary.support_hash,
        summary.obs_count as u64,
    ] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    for v in summary.z_dot.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..m {
        for j in 0..=i {
            out.extend_from_slice(&summary.s_dot[(i, j)].to_le_bytes());
        }
    }
    out
}

/// Decode a summary addressed to sensors sharing `support`. A different
/// support hash or size is a protocol error.
pub fn decode_summary(bytes: &[u8], support: &SupportSet) -> Result<LocalSummary> {
    let mut words = bytes
        .chunks_exact(8)
        .map(|c| <[u8; 8]>::try_from(c).expect("8-byte chunk"));
    if !bytes.len().is_multiple_of(8) || bytes.len() < 8 * SUMMARY_HEADER_WORDS {
        return Err(Error::Protocol(format!(
            "summary message of {} bytes is malformed",
            bytes.len()
        )));
    }
    let mut header = [0u64; SUMMARY_HEADER_WORDS];
    for h in &mut header {
        *h = u64::from_le_bytes(words.next().expect("length checked"));
    }
    let [version, sensor_id, m, hash, obs_count] = header;
    if version != SUMMARY_SCHEMA_VERSION {
        return Err(Error::Protocol(format!(
            "unsupported summary schema version {version}"
        )));
    }
    if hash != support.content_hash() {
        return Err(Error::Protocol(format!(
            "summary from sensor {sensor_id} carries support hash {hash:#018x}, expected {:#018x}",
            support.content_hash()
        )));
    }
    let m = m as usize;
    if m != support.len() {
        return Err(Error::Protocol(format!(
            "summary has |U| = {m}, expected {}",
            support.len()
        )));
    }
    let expected = 8 * summary_message_size(m).total_words();
    if bytes.len() != expected {
        return Err(Error::Protocol(format!(
            "summary message has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut floats = words.map(f64::from_le_bytes);
    let z_dot = DVector::from_iterator(m, floats.by_ref().take(m));
    let mut s_dot = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = floats.next().expect("length checked");
            s_dot[(i, j)] = v;
            s_dot[(j, i)] = v;
        }
    }
    Ok(LocalSummary {
        sensor_id,
        z_dot,
        s_dot,
        obs_count: obs_count as usize,
        support_hash: hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(support: &SupportSet) -> LocalSummary {
        let m = support.len();
        let a = DMatrix::from_fn(m, m, |i, j| (i * 3 + j) as f64 * 0.1 - 0.4);
        LocalSummary {
            sensor_id: 42,
            z_dot: DVector::from_fn(m, |i, _| i as f64 - 1.5),
            s_dot: a.tr_mul(&a),
            obs_count: 17,
            support_hash: support.content_hash(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let u = SupportSet::new(vec![4, 9, 2]).unwrap();
        let s = sample(&u);
        let bytes = encode_summary(&s);
        assert_eq!(bytes.len(), 8 * (5 + 3 + 6));
        assert_eq!(decode_summary(&bytes, &u).unwrap(), s);
    }

    #[test]
    fn hash_mismatch_is_a_protocol_error() {
        let u = SupportSet::new(vec![4, 9, 2]).unwrap();
        let other = SupportSet::new(vec![4, 9, 3]).unwrap();
        let bytes = encode_summary(&sample(&u));
        assert!(matches!(
            decode_summary(&bytes, &other),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn truncated_message_is_rejected() {
        let u = SupportSet::new(vec![1, 2]).unwrap();
        let bytes = encode_summary(&sample(&u));
        assert!(decode_summary(&bytes[..bytes.len() - 8], &u).is_err());
        assert!(decode_summary(&bytes[..12], &u).is_err());
    }
}
