use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::road_kernel::RoadNetwork;

/// A directed walk of at most `L` segments starting after `origin`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Walk {
    pub origin: usize,
    pub steps: Vec<usize>,
}

impl Walk {
    /// Where the sensor ends up: the last step, or the origin for an empty walk.
    pub fn terminus(&self) -> usize {
        self.steps.last().copied().unwrap_or(self.origin)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Every walk of `length` segments from `origin`, in lexicographic order of
/// their steps. A walk that reaches a segment without successors stops there
/// and is kept; an origin without successors yields one empty walk.
pub fn enumerate_walks(net: &RoadNetwork, origin: usize, length: usize) -> Result<Vec<Walk>> {
    if origin >= net.len() {
        return Err(Error::InvalidNetwork(format!(
            "origin {origin} is not a segment"
        )));
    }
    let mut out = Vec::new();
    let mut steps = Vec::with_capacity(length);
    extend(net, origin, length, &mut steps, &mut out);
    Ok(out)
}

fn extend(
    net: &RoadNetwork,
    origin: usize,
    length: usize,
    steps: &mut Vec<usize>,
    out: &mut Vec<Walk>,
) {
    let at = steps.last().copied().unwrap_or(origin);
    let next = net.out_neighbors(at);
    if steps.len() == length || next.is_empty() {
        out.push(Walk {
            origin,
            steps: steps.clone(),
        });
        return;
    }
    for &s in next {
        steps.push(s);
        extend(net, origin, length, steps, out);
        steps.pop();
    }
}

/// Segments visited by the walks that are not yet observed, ascending and
/// without repeats.
pub fn induced_unobserved<'a>(
    walks: impl IntoIterator<Item = &'a Walk>,
    observed: &HashSet<usize>,
) -> Vec<usize> {
    walks
        .into_iter()
        .flat_map(|w| w.steps.iter().copied())
        .filter(|s| !observed.contains(s))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// A sensor's candidate walks `W_k` with their induced unobserved sets and
/// the union `Y_{W_k}` of those sets.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkSet {
    pub sensor: usize,
    pub walks: Vec<Walk>,
    /// `Y_{W_k}`, ascending.
    pub candidates: Vec<usize>,
    /// For each walk, positions of its induced segments within `candidates`.
    induced: Vec<Vec<usize>>,
}

impl WalkSet {
    pub fn new(
        net: &RoadNetwork,
        sensor: usize,
        origin: usize,
        length: usize,
        observed: &HashSet<usize>,
    ) -> Result<Self> {
        Ok(WalkSet::from_walks(
            sensor,
            enumerate_walks(net, origin, length)?,
            observed,
        ))
    }

    pub fn from_walks(sensor: usize, walks: Vec<Walk>, observed: &HashSet<usize>) -> Self {
        let candidates = induced_unobserved(&walks, observed);
        let induced = walks
            .iter()
            .map(|w| {
                induced_unobserved(std::iter::once(w), observed)
                    .into_iter()
                    .map(|s| {
                        candidates
                            .binary_search(&s)
                            .expect("walk segments are candidates")
                    })
                    .collect()
            })
            .collect();
        WalkSet {
            sensor,
            walks,
            candidates,
            induced,
        }
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    /// Positions in `candidates` of the segments walk `w` would newly observe.
    pub fn induced_positions(&self, w: usize) -> &[usize] {
        &self.induced[w]
    }

    /// `Y_w` of walk `w`, ascending.
    pub fn induced_segments(&self, w: usize) -> Vec<usize> {
        self.induced[w]
            .iter()
            .map(|&p| self.candidates[p])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road_kernel::Segment;

    fn net(n: usize, edges: &[(usize, usize)]) -> RoadNetwork {
        let segments = (0..n)
            .map(|i| Segment {
                id: format!("s{i}"),
                features: vec![i as f64],
            })
            .collect();
        RoadNetwork::new(segments, edges.to_vec(), None).unwrap()
    }

    #[test]
    fn length_one_walks_are_out_neighbors() {
        let g = net(4, &[(0, 2), (0, 1), (1, 3)]);
        let walks = enumerate_walks(&g, 0, 1).unwrap();
        let firsts: Vec<usize> = walks.iter().map(|w| w.steps[0]).collect();
        assert_eq!(firsts, vec![1, 2]);
    }

    #[test]
    fn uniform_out_degree_two() {
        // every vertex i -> 2i+1, 2i+2 (mod 7) keeps out-degree 2 everywhere
        let edges: Vec<(usize, usize)> = (0..7)
            .flat_map(|i| [(i, (2 * i + 1) % 7), (i, (2 * i + 2) % 7)])
            .collect();
        let g = net(7, &edges);
        assert_eq!(enumerate_walks(&g, 3, 3).unwrap().len(), 8);
    }

    #[test]
    fn dead_ends_truncate() {
        let g = net(4, &[(0, 1), (0, 2), (1, 3)]);
        let walks = enumerate_walks(&g, 0, 3).unwrap();
        assert_eq!(
            walks.iter().map(|w| w.steps.clone()).collect::<Vec<_>>(),
            vec![vec![1, 3], vec![2]]
        );
        let stuck = enumerate_walks(&g, 3, 2).unwrap();
        assert_eq!(stuck.len(), 1);
        assert!(stuck[0].is_empty());
        assert_eq!(stuck[0].terminus(), 3);
        assert!(enumerate_walks(&g, 9, 1).is_err());
    }

    #[test]
    fn induced_sets() {
        let observed: HashSet<usize> = [1, 2].into_iter().collect();
        let w = Walk {
            origin: 0,
            steps: vec![1, 2],
        };
        assert!(induced_unobserved([&w], &observed).is_empty());
        let loop_walk = Walk {
            origin: 0,
            steps: vec![3, 4, 3],
        };
        assert_eq!(induced_unobserved([&loop_walk], &observed), vec![3, 4]);
        let other = Walk {
            origin: 5,
            steps: vec![4, 6],
        };
        assert_eq!(
            induced_unobserved([&loop_walk, &other], &observed),
            vec![3, 4, 6]
        );
    }

    #[test]
    fn walk_set_positions() {
        let g = net(5, &[(0, 1), (0, 2), (1, 3), (2, 4)]);
        let observed: HashSet<usize> = [0, 3].into_iter().collect();
        let ws = WalkSet::new(&g, 0, 0, 2, &observed).unwrap();
        assert_eq!(ws.candidates, vec![1, 2, 4]);
        assert_eq!(ws.induced_segments(0), vec![1]);
        assert_eq!(ws.induced_segments(1), vec![2, 4]);
    }
}
