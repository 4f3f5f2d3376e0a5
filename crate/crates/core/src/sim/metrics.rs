use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::config::Algorithm;
use crate::error::{Error, Result};
use crate::fusion::summary_message_size;

/// `√(|V|⁻¹ Σ_s (z_s − μ̂_s)²)`.
pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let sq: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sq / truth.len() as f64).sqrt())
}

/// Payload sent during one round, in scalars except for the adjacency bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MessageLedger {
    pub summary_scalars: usize,
    /// Reading sums and counts exchanged to agree on an empirical mean.
    pub mean_scalars: usize,
    pub phi_scalars: usize,
    pub adjacency_bits: usize,
    pub observation_scalars: usize,
}

impl MessageLedger {
    pub fn payload_scalars(&self) -> usize {
        self.summary_scalars + self.mean_scalars + self.phi_scalars + self.observation_scalars
    }
}

/// What one round of communication costs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RoundMessages<'a> {
    /// Local summaries over `support_len` segments from every sensor, then
    /// `Φ_k` for each sensor's candidate count, then adjacency vectors.
    /// With `shared_mean` each sensor first sends its reading sum and count.
    Summaries {
        sensors: usize,
        support_len: usize,
        candidates: &'a [usize],
        shared_mean: bool,
    },
    /// Every sensor ships its local data set of the given size.
    RawData { local_sizes: &'a [usize] },
}

pub fn ledger_account(messages: &RoundMessages<'_>) -> MessageLedger {
    match *messages {
        RoundMessages::Summaries {
            sensors,
            support_len,
            candidates,
            shared_mean,
        } => MessageLedger {
            summary_scalars: sensors * summary_message_size(support_len).payload_scalars,
            mean_scalars: if shared_mean { 2 * sensors } else { 0 },
            phi_scalars: candidates.iter().map(|c| c * support_len).sum(),
            adjacency_bits: if candidates.is_empty() {
                0
            } else {
                sensors * sensors
            },
            observation_scalars: 0,
        },
        RoundMessages::RawData { local_sizes } => MessageLedger {
            observation_scalars: local_sizes.iter().sum(),
            ..MessageLedger::default()
        },
    }
}

/// One line of the metrics table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub sensors: usize,
    #[serde(rename = "L")]
    pub walk_length: usize,
    pub seed: u64,
    pub round: usize,
    /// Readings taken so far, repeats included.
    pub observations: usize,
    /// Distinct segments observed so far (`|D|`).
    pub observed_segments: usize,
    pub rmse: f64,
    /// Size of the largest planning group; 0 before the first round.
    pub kappa: usize,
    /// Slowest agent's compute time, when timing is recorded.
    pub max_agent_ms: Option<f64>,
    pub payload_scalars: usize,
    pub adjacency_bits: usize,
}

pub const METRICS_HEADER: [&str; 12] = [
    "algorithm",
    "K",
    "L",
    "seed",
    "round",
    "observations",
    "observed_segments",
    "rmse",
    "kappa",
    "max_agent_ms",
    "payload_scalars",
    "adjacency_bits",
];

/// Comma-separated metrics with a header row; missing times are `NA`.
pub fn write_metrics<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.algorithm.label().to_string(),
            r.sensors.to_string(),
            r.walk_length.to_string(),
            r.seed.to_string(),
            r.round.to_string(),
            r.observations.to_string(),
            r.observed_segments.to_string(),
            r.rmse.to_string(),
            r.kappa.to_string(),
            r.max_agent_ms
                .map_or_else(|| "NA".to_string(), |t| format!("{t:.3}")),
            r.payload_scalars.to_string(),
            r.adjacency_bits.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean over seeds of one round of one (algorithm, K, L) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub sensors: usize,
    #[serde(rename = "L")]
    pub walk_length: usize,
    pub round: usize,
    pub runs: usize,
    pub mean_observed_segments: f64,
    pub mean_rmse: f64,
}

/// Mean RMSE and `|D|` per round, averaged over the seeds that reached it.
pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Algorithm, usize, usize, usize), (usize, f64, f64)> = BTreeMap::new();
    for r in rows {
        let e = groups
            .entry((r.algorithm, r.sensors, r.walk_length, r.round))
            .or_default();
        e.0 += 1;
        e.1 += r.observed_segments as f64;
        e.2 += r.rmse;
    }
    groups
        .into_iter()
        .map(
            |((algorithm, sensors, walk_length, round), (runs, d, e))| SummaryRow {
                algorithm,
                sensors,
                walk_length,
                round,
                runs,
                mean_observed_segments: d / runs as f64,
                mean_rmse: e / runs as f64,
            },
        )
        .collect()
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Last row of every run, in input order.
pub fn final_rows(rows: &[MetricsRow]) -> Vec<&MetricsRow> {
    let mut out: Vec<&MetricsRow> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(last)
                if (last.algorithm, last.sensors, last.walk_length, last.seed)
                    == (r.algorithm, r.sensors, r.walk_length, r.seed) =>
            {
                *last = r
            }
            _ => out.push(r),
        }
    }
    out
}
