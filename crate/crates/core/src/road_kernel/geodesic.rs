use nalgebra::DMatrix;

use super::network::RoadNetwork;

/// All-pairs geodesic distances over a road network.
///
/// `directed[(s, t)]` is the shortest `s → t` path length (infinite when
/// unreachable). `distances` is the symmetrized version
/// `min(d(s→t), d(t→s))` that feeds the embedding.
#[derive(Clone, Debug)]
pub struct GeodesicMatrix {
    directed: DMatrix<f64>,
    distances: DMatrix<f64>,
    reachable: DMatrix<bool>,
}

impl GeodesicMatrix {
    pub fn len(&self) -> usize {
        self.distances.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn directed(&self) -> &DMatrix<f64> {
        &self.directed
    }

    /// Symmetrized distances; unreachable pairs hold `f64::INFINITY`.
    pub fn distances(&self) -> &DMatrix<f64> {
        &self.distances
    }

    /// `reachable[(s, t)]` when either direction has a path.
    pub fn reachable(&self) -> &DMatrix<bool> {
        &self.reachable
    }

    pub fn is_connected(&self) -> bool {
        self.reachable.iter().all(|&r| r)
    }

    /// Largest finite symmetrized distance.
    pub fn max_finite(&self) -> f64 {
        self.distances
            .iter()
            .filter(|d| d.is_finite())
            .fold(0.0, |m: f64, &d| m.max(d))
    }

    /// Distances with every unreachable pair replaced by twice the largest
    /// finite distance (or 1 when nothing is reachable).
    pub fn imputed(&self) -> DMatrix<f64> {
        let max = self.max_finite();
        let fill = if max > 0.0 { 2.0 * max } else { 1.0 };
        self.distances.map(|d| if d.is_finite() { d } else { fill })
    }
}

/// Floyd–Warshall over the standardized Manhattan edge weights, then symmetrized.
pub fn geodesic_distances(net: &RoadNetwork) -> GeodesicMatrix {
    let n = net.len();
    let mut dist = vec![f64::INFINITY; n * n];
    for s in 0..n {
        dist[s * n + s] = 0.0;
    }
    for &(a, b) in net.edges() {
        let w = net.feature_distance(a, b);
        if w < dist[a * n + b] {
            dist[a * n + b] = w;
        }
    }
    for k in 0..n {
        let row_k: Vec<f64> = dist[k * n..(k + 1) * n].to_vec();
        for i in 0..n {
            let dik = dist[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            let row_i = &mut dist[i * n..(i + 1) * n];
            for (dij, dkj) in row_i.iter_mut().zip(&row_k) {
                let via = dik + dkj;
                if via < *dij {
                    *dij = via;
                }
            }
        }
    }

    let directed = DMatrix::from_fn(n, n, |i, j| dist[i * n + j]);
    let distances = DMatrix::from_fn(n, n, |i, j| dist[i * n + j].min(dist[j * n + i]));
    let reachable = distances.map(|d| d.is_finite());
    GeodesicMatrix {
        directed,
        distances,
        reachable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road_kernel::network::Segment;

    fn line(weights_as_features: &[f64]) -> RoadNetwork {
        let segments = weights_as_features
            .iter()
            .enumerate()
            .map(|(i, &f)| Segment {
                id: format!("s{i}"),
                features: vec![f],
            })
            .collect();
        let edges = (0..weights_as_features.len() - 1)
            .map(|i| (i, i + 1))
            .collect();
        RoadNetwork::new(segments, edges, Some(vec![1.0])).unwrap()
    }

    #[test]
    fn single_vertex() {
        let g = geodesic_distances(&line(&[0.0]));
        assert_eq!(g.distances(), &DMatrix::from_element(1, 1, 0.0));
    }

    #[test]
    fn path_sums_weights() {
        // features 0, 1, 3 give weights 1 and 2 with unit range
        let g = geodesic_distances(&line(&[0.0, 1.0, 3.0]));
        assert_eq!(g.directed()[(0, 2)], 3.0);
        assert!(g.directed()[(2, 0)].is_infinite());
        assert_eq!(g.distances()[(2, 0)], 3.0);
        assert!(g.is_connected());
    }

    #[test]
    fn disconnected_pairs_are_flagged_and_imputed() {
        let segments = (0..3)
            .map(|i| Segment {
                id: i.to_string(),
                features: vec![i as f64],
            })
            .collect();
        let net = RoadNetwork::new(segments, vec![(0, 1)], None).unwrap();
        let g = geodesic_distances(&net);
        assert!(!g.reachable()[(0, 2)]);
        assert!(g.reachable()[(1, 0)]);
        let imputed = g.imputed();
        assert_eq!(imputed[(0, 2)], 2.0 * 0.5);
        assert_eq!(imputed[(0, 1)], 0.5);
    }
}
