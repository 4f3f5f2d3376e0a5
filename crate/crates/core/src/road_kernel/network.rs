use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Current version of the JSON road-network document.
pub const NETWORK_SCHEMA_VERSION: u32 = 1;

/// One road segment: an opaque id and its feature vector
/// (length, lanes, speed limit, road class, ...).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
    pub features: Vec<f64>,
}

/// On-disk form of a road network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub schema_version: u32,
    pub segments: Vec<Segment>,
    /// `[from_id, to_id]` pairs: the end of `from` joins the start of `to`.
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_ranges: Option<Vec<f64>>,
}

/// Weighted directed graph of road segments. Vertices are segments, edges
/// join consecutive segments and are weighted by the standardized Manhattan
/// distance between feature vectors.
#[derive(Clone, Debug)]
pub struct RoadNetwork {
    segments: Vec<Segment>,
    edges: Vec<(usize, usize)>,
    feature_ranges: Vec<f64>,
    out_neighbors: Vec<Vec<usize>>,
    ids: HashMap<String, usize>,
}

impl RoadNetwork {
    /// Validate segments and index-based edges. When `feature_ranges` is
    /// `None` each range is `max - min` of that feature over all segments.
    pub fn new(
        segments: Vec<Segment>,
        edges: Vec<(usize, usize)>,
        feature_ranges: Option<Vec<f64>>,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidNetwork("no segments".into()));
        }
        let p = segments[0].features.len();
        if p == 0 {
            return Err(Error::InvalidNetwork("segments have no features".into()));
        }
        let mut ids = HashMap::with_capacity(segments.len());
        for (i, seg) in segments.iter().enumerate() {
            if seg.features.len() != p {
                return Err(Error::InvalidNetwork(format!(
                    "segment {:?} has {} features, expected {p}",
                    seg.id,
                    seg.features.len()
                )));
            }
            if seg.features.iter().any(|f| !f.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "segment {:?} has a non-finite feature",
                    seg.id
                )));
            }
            if ids.insert(seg.id.clone(), i).is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate segment id {:?}",
                    seg.id
                )));
            }
        }

        let n = segments.len();
        let mut seen = HashSet::with_capacity(edges.len());
        let mut out_neighbors = vec![Vec::new(); n];
        for &(from, to) in &edges {
            if from >= n || to >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({from}, {to}) references a segment outside 0..{n}"
                )));
            }
            if !seen.insert((from, to)) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate edge ({from}, {to})"
                )));
            }
            out_neighbors[from].push(to);
        }
        for list in &mut out_neighbors {
            list.sort_unstable();
        }

        let feature_ranges = match feature_ranges {
            Some(r) => {
                if r.len() != p {
                    return Err(Error::InvalidNetwork(format!(
                        "{} feature ranges given for {p} features",
                        r.len()
                    )));
                }
                r
            }
            None => (0..p)
                .map(|i| {
                    let (lo, hi) = segments
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                            (lo.min(s.features[i]), hi.max(s.features[i]))
                        });
                    hi - lo
                })
                .collect(),
        };
        if let Some(i) = feature_ranges
            .iter()
            .position(|r| !(r.is_finite() && *r > 0.0))
        {
            return Err(Error::InvalidNetwork(format!(
                "feature {i} has non-positive range {}",
                feature_ranges[i]
            )));
        }

        Ok(RoadNetwork {
            segments,
            edges,
            feature_ranges,
            out_neighbors,
            ids,
        })
    }

    /// Build from id-based edges, as found in a network document.
    pub fn from_id_edges<S: AsRef<str>>(
        segments: Vec<Segment>,
        edges: &[(S, S)],
        feature_ranges: Option<Vec<f64>>,
    ) -> Result<Self> {
        let lookup: HashMap<&str, usize> = segments
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();
        let resolve = |id: &str| {
            lookup.get(id).copied().ok_or_else(|| {
                Error::InvalidNetwork(format!("edge references unknown segment {id:?}"))
            })
        };
        let indexed = edges
            .iter()
            .map(|(a, b)| Ok((resolve(a.as_ref())?, resolve(b.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        RoadNetwork::new(segments, indexed, feature_ranges)
    }

    pub fn from_document(doc: NetworkDocument) -> Result<Self> {
        if doc.schema_version != NETWORK_SCHEMA_VERSION {
            return Err(Error::InvalidNetwork(format!(
                "unsupported schema version {} (expected {NETWORK_SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        RoadNetwork::from_id_edges(doc.segments, &doc.edges, doc.feature_ranges)
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            schema_version: NETWORK_SCHEMA_VERSION,
            segments: self.segments.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (self.segments[a].id.clone(), self.segments[b].id.clone()))
                .collect(),
            feature_ranges: Some(self.feature_ranges.clone()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        RoadNetwork::from_document(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        RoadNetwork::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_ranges.len()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn feature_ranges(&self) -> &[f64] {
        &self.feature_ranges
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.segments[index].id
    }

    /// Successors of `s`, ascending.
    pub fn out_neighbors(&self, s: usize) -> &[usize] {
        &self.out_neighbors[s]
    }

    /// Largest out-degree in the network.
    pub fn max_out_degree(&self) -> usize {
        self.out_neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        from < self.len() && self.out_neighbors[from].binary_search(&to).is_ok()
    }

    /// Standardized Manhattan distance `Σ_i |[s]_i − [s']_i| / r_i` for an edge `s → s'`.
    pub fn edge_weight(&self, from: usize, to: usize) -> Result<f64> {
        if !self.has_edge(from, to) {
            return Err(Error::NotAnEdge(from, to));
        }
        Ok(self.feature_distance(from, to))
    }

    /// The same standardized Manhattan distance without the edge check.
    pub fn feature_distance(&self, a: usize, b: usize) -> f64 {
        let fa = &self.segments[a].features;
        let fb = &self.segments[b].features;
        fa.iter()
            .zip(fb)
            .zip(&self.feature_ranges)
            .map(|((x, y), r)| (x - y).abs() / r)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(id: &str, f: &[f64]) -> Segment {
        Segment {
            id: id.to_string(),
            features: f.to_vec(),
        }
    }

    #[test]
    fn two_segment_network() {
        let net = RoadNetwork::from_id_edges(
            vec![seg("a", &[0.0, 1.0]), seg("b", &[2.0, 3.0])],
            &[("a", "b")],
            None,
        )
        .unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.edges(), &[(0, 1)]);
        assert_eq!(net.feature_ranges(), &[2.0, 2.0]);
        assert_eq!(net.edge_weight(0, 1).unwrap(), 2.0);
        assert!(matches!(net.edge_weight(1, 0), Err(Error::NotAnEdge(1, 0))));
    }

    #[test]
    fn unknown_edge_endpoint_is_rejected() {
        let err = RoadNetwork::from_id_edges(
            vec![seg("a", &[0.0]), seg("b", &[1.0])],
            &[("a", "zz")],
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown segment"));
        assert!(
            RoadNetwork::new(vec![seg("a", &[0.0]), seg("b", &[1.0])], vec![(0, 7)], None).is_err()
        );
    }

    #[test]
    fn duplicates_and_degenerate_ranges_are_rejected() {
        assert!(RoadNetwork::new(vec![seg("a", &[0.0]), seg("a", &[1.0])], vec![], None).is_err());
        assert!(RoadNetwork::new(
            vec![seg("a", &[0.0]), seg("b", &[1.0])],
            vec![(0, 1), (0, 1)],
            None
        )
        .is_err());
        // second feature is constant
        assert!(RoadNetwork::new(
            vec![seg("a", &[0.0, 5.0]), seg("b", &[1.0, 5.0])],
            vec![],
            None
        )
        .is_err());
        assert!(
            RoadNetwork::new(vec![seg("a", &[0.0]), seg("b", &[1.0, 2.0])], vec![], None).is_err()
        );
        assert!(RoadNetwork::new(vec![], vec![], None).is_err());
    }

    #[test]
    fn edge_weight_examples() {
        let net = RoadNetwork::new(
            vec![
                seg("a", &[0.0, 0.0]),
                seg("b", &[3.0, 7.0]),
                seg("c", &[0.0, 0.0]),
            ],
            vec![(0, 1), (0, 2)],
            Some(vec![3.0, 7.0]),
        )
        .unwrap();
        assert_eq!(net.edge_weight(0, 2).unwrap(), 0.0);
        assert_eq!(net.edge_weight(0, 1).unwrap(), 2.0);
    }

    #[test]
    fn json_round_trip() {
        let net = RoadNetwork::from_id_edges(
            vec![seg("a", &[0.0]), seg("b", &[1.0]), seg("c", &[4.0])],
            &[("a", "b"), ("b", "c"), ("c", "a")],
            None,
        )
        .unwrap();
        let back = RoadNetwork::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back.to_document(), net.to_document());
        assert!(
            RoadNetwork::from_json(r#"{"schema_version": 9, "segments": [], "edges": []}"#)
                .is_err()
        );
    }
}
