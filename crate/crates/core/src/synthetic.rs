//! Generated road networks for experiments and tests.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::road_kernel::{RoadNetwork, Segment};

/// Road classes used as the last feature of grid segments.
pub const LOCAL: f64 = 0.0;
pub const ARTERIAL: f64 = 1.0;
pub const HIGHWAY: f64 = 2.0;

/// Nominal spread of each grid feature, used as its range.
pub const GRID_FEATURE_RANGES: [f64; 4] = [0.5, 3.0, 60.0, 2.0];

/// A city grid with exactly `segments` directed road segments.
///
/// Streets join neighbouring intersections of a square lattice and are
/// added in breadth-first order from one corner, each as a pair of opposite
/// segments; an odd count ends with a one-way street that closes a block.
/// A segment leads to the segments leaving its end intersection, except
/// straight back, which is only allowed at dead ends. The result is
/// strongly connected. Features are
/// `[length_km, lanes, speed_limit_kmh, class]`: every third street is an
/// arterial and the middle row and column of the covered area are highways.
pub fn grid_network(segments: usize, seed: u64) -> Result<RoadNetwork> {
    if segments < 2 {
        return Err(Error::InvalidNetwork(
            "a grid needs at least two segments".into(),
        ));
    }
    let mut side = 2;
    while 4 * side * (side - 1) < segments {
        side += 1;
    }
    let at = |v: usize| (v / side, v % side);
    let neighbours = |v: usize| {
        let (r, c) = at(v);
        let mut out = Vec::with_capacity(4);
        if c + 1 < side {
            out.push(v + 1);
        }
        if r + 1 < side {
            out.push(v + side);
        }
        if c > 0 {
            out.push(v - 1);
        }
        if r > 0 {
            out.push(v - side);
        }
        out
    };

    // streets in breadth-first order over intersections
    let mut streets: Vec<(usize, usize)> = Vec::new();
    let mut known: HashSet<(usize, usize)> = HashSet::new();
    let mut reached = vec![false; side * side];
    let mut queue = VecDeque::from([0usize]);
    reached[0] = true;
    while let Some(v) = queue.pop_front() {
        for u in neighbours(v) {
            if known.insert((v.min(u), v.max(u))) {
                streets.push((v, u));
            }
            if !reached[u] {
                reached[u] = true;
                queue.push_back(u);
            }
        }
    }

    let pairs = segments / 2;
    let mut links: Vec<(usize, usize)> = streets[..pairs]
        .iter()
        .flat_map(|&(a, b)| [(a, b), (b, a)])
        .collect();
    if segments % 2 == 1 {
        let inside: HashSet<usize> = links.iter().map(|l| l.0).collect();
        let closing = streets[pairs..]
            .iter()
            .find(|(a, b)| inside.contains(a) && inside.contains(b))
            .or(streets.get(pairs))
            .ok_or_else(|| Error::InvalidNetwork(format!("no room for {segments} segments")))?;
        links.push(*closing);
    }

    let rows_used = links
        .iter()
        .map(|l| at(l.0).0.max(at(l.1).0))
        .max()
        .unwrap_or(0);
    let cols_used = links
        .iter()
        .map(|l| at(l.0).1.max(at(l.1).1))
        .max()
        .unwrap_or(0);
    let class_of = |&(a, b): &(usize, usize)| {
        let ((ra, ca), (rb, _)) = (at(a), at(b));
        let (line, middle) = if ra == rb {
            (ra, rows_used / 2)
        } else {
            (ca, cols_used / 2)
        };
        if line == middle {
            HIGHWAY
        } else if line % 3 == 0 {
            ARTERIAL
        } else {
            LOCAL
        }
    };

    let mut leaving: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(a, _)) in links.iter().enumerate() {
        leaving.entry(a).or_default().push(i);
    }
    let mut edges = Vec::new();
    for (i, &(a, b)) in links.iter().enumerate() {
        let all = leaving.get(&b).map(Vec::as_slice).unwrap_or(&[]);
        let onward: Vec<usize> = all.iter().copied().filter(|&j| links[j].1 != a).collect();
        let next = if onward.is_empty() {
            all.to_vec()
        } else {
            onward
        };
        edges.extend(next.into_iter().map(|j| (i, j)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segs = links
        .iter()
        .map(|link| {
            let class = class_of(link);
            let (lanes, speed) = match class {
                HIGHWAY => (rng.random_range(3..=4), 90.0),
                ARTERIAL => (rng.random_range(2..=3), 60.0),
                _ => (rng.random_range(1..=2), 40.0),
            };
            Segment {
                id: format!("n{}-n{}", link.0, link.1),
                features: vec![
                    rng.random_range(0.1..0.6),
                    lanes as f64,
                    speed + rng.random_range(-5.0..5.0),
                    class,
                ],
            }
        })
        .collect();
    RoadNetwork::new(segs, edges, Some(GRID_FEATURE_RANGES.to_vec()))
}

/// `n` segments, each leading to `out_degree` distinct other segments drawn
/// uniformly at random, with two uniform features.
pub fn random_digraph(n: usize, out_degree: usize, seed: u64) -> Result<RoadNetwork> {
    if n < 2 || out_degree >= n {
        return Err(Error::InvalidNetwork(format!(
            "cannot give {n} segments out-degree {out_degree}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments: Vec<Segment> = (0..n)
        .map(|i| Segment {
            id: format!("v{i}"),
            features: vec![rng.random::<f64>(), rng.random::<f64>()],
        })
        .collect();
    // pin the ranges so that no feature is constant
    segments[0].features = vec![0.0, 0.0];
    segments[1].features = vec![1.0, 1.0];
    let mut edges = Vec::with_capacity(n * out_degree);
    for v in 0..n {
        for t in sample(&mut rng, n - 1, out_degree).into_iter() {
            edges.push((v, if t >= v { t + 1 } else { t }));
        }
    }
    RoadNetwork::new(segments, edges, None)
}

/// `s0 -> s1 -> ... -> s{n-1}` with feature `i` on segment `i`, so the
/// geodesic distance between `i` and `j` is `|i - j| / (n - 1)`.
pub fn path_network(n: usize) -> Result<RoadNetwork> {
    if n < 2 {
        return Err(Error::InvalidNetwork(
            "a path needs at least two segments".into(),
        ));
    }
    let segments = (0..n)
        .map(|i| Segment {
            id: format!("s{i}"),
            features: vec![i as f64],
        })
        .collect();
    RoadNetwork::new(segments, (1..n).map(|i| (i - 1, i)).collect(), None)
}

/// Three mutually connected segments with one-hot features: every pair is
/// at standardized distance 2.
pub fn triangle_network() -> Result<RoadNetwork> {
    let segments = (0..3)
        .map(|i| Segment {
            id: ["a", "b", "c"][i].to_string(),
            features: (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect(),
        })
        .collect();
    let edges = (0..3)
        .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    RoadNetwork::new(segments, edges, None)
}
