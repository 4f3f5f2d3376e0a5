//! Plain-text formats for embeddings, support sets and observations.
//!
//! Embedding: a header line `n p`, then one whitespace-separated row of `p`
//! coordinates per segment in network order. Support set: one segment id per
//! line. Observations: CSV with header `segment_id,value`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::ObservationSet;
use crate::road_kernel::{Embedding, RoadNetwork};

pub fn embedding_to_string(embedding: &Embedding) -> String {
    let coords = embedding.coords();
    let mut out = format!("{} {}\n", coords.nrows(), coords.ncols());
    for row in coords.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn embedding_from_str(text: &str) -> Result<Embedding> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty embedding file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("bad embedding header {header:?}")))
        })
        .collect::<Result<_>>()?;
    let [n, p] = dims[..] else {
        return Err(Error::Config(format!("bad embedding header {header:?}")));
    };
    let mut values = Vec::with_capacity(n * p);
    for (row, line) in lines.enumerate() {
        let parsed: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Config(format!("bad coordinate {t:?} on row {row}")))
            })
            .collect::<Result<_>>()?;
        if parsed.len() != p {
            return Err(Error::LengthMismatch {
                left: parsed.len(),
                right: p,
            });
        }
        values.extend(parsed);
    }
    if values.len() != n * p {
        return Err(Error::LengthMismatch {
            left: values.len() / p.max(1),
            right: n,
        });
    }
    Embedding::from_coords(DMatrix::from_row_slice(n, p, &values))
}

pub fn write_embedding(path: impl AsRef<Path>, embedding: &Embedding) -> Result<()> {
    Ok(std::fs::write(path, embedding_to_string(embedding))?)
}

pub fn read_embedding(path: impl AsRef<Path>) -> Result<Embedding> {
    embedding_from_str(&std::fs::read_to_string(path)?)
}

pub fn support_to_string(net: &RoadNetwork, support: &[usize]) -> String {
    support
        .iter()
        .map(|&s| format!("{}\n", net.id(s)))
        .collect()
}

pub fn support_from_str(net: &RoadNetwork, text: &str) -> Result<Vec<usize>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|id| {
            net.index_of(id)
                .ok_or_else(|| Error::InvalidSupport(format!("unknown segment id {id:?}")))
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct ObservationRecord {
    segment_id: String,
    value: f64,
}

pub fn write_observations(
    path: impl AsRef<Path>,
    net: &RoadNetwork,
    obs: &ObservationSet,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (&s, &value) in obs.indices().iter().zip(obs.values()) {
        w.serialize(ObservationRecord {
            segment_id: net.id(s).to_string(),
            value,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads observations keyed by segment id; each segment may appear once.
pub fn read_observations(path: impl AsRef<Path>, net: &RoadNetwork) -> Result<ObservationSet> {
    let mut r = csv::Reader::from_path(path)?;
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for record in r.deserialize() {
        let rec: ObservationRecord = record?;
        let s = net.index_of(&rec.segment_id).ok_or_else(|| {
            Error::InvalidObservations(format!("unknown segment id {:?}", rec.segment_id))
        })?;
        indices.push(s);
        values.push(rec.value);
    }
    ObservationSet::new(indices, values)
}
