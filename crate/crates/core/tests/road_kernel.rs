mod common;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use roadfusion::road_kernel::{
    geodesic_distances, mds_embed, mds_embed_with, select_dimension, stress, MdsOptions,
    RoadNetwork, DEFAULT_RETAINED_MASS,
};
use roadfusion::synthetic::{grid_network, path_network, random_digraph, triangle_network};

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0)
    }
}

/// Single-source Dijkstra with edge weights recomputed from raw features.
fn dijkstra(net: &RoadNetwork, src: usize) -> Vec<f64> {
    let ranges = net.feature_ranges();
    let weight = |a: usize, b: usize| {
        let (fa, fb) = (&net.segments()[a].features, &net.segments()[b].features);
        (0..fa.len())
            .map(|i| {
                if ranges[i] > 0.0 {
                    (fa[i] - fb[i]).abs() / ranges[i]
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    };
    let mut dist = vec![f64::INFINITY; net.len()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, src)]);
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &w in net.out_neighbors(v) {
            let nd = d + weight(v, w);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    dist
}

fn close(a: f64, b: f64) -> bool {
    (a.is_infinite() && b.is_infinite()) || (a - b).abs() <= 1e-9 * (1.0 + b.abs())
}

#[test]
fn floyd_warshall_matches_dijkstra() {
    for seed in 0..6 {
        let net = random_digraph(25, 2, seed).unwrap();
        let g = geodesic_distances(&net);
        let rows: Vec<Vec<f64>> = (0..25).map(|s| dijkstra(&net, s)).collect();
        for i in 0..25 {
            for j in 0..25 {
                assert!(
                    close(g.directed()[(i, j)], rows[i][j]),
                    "seed {seed} ({i},{j})"
                );
                let sym = rows[i][j].min(rows[j][i]);
                assert!(close(g.distances()[(i, j)], sym), "seed {seed} ({i},{j})");
            }
        }
    }
}

#[test]
fn grid_fixture_geodesics_match_dijkstra() {
    let net = grid_network(60, 7).unwrap();
    let g = geodesic_distances(&net);
    assert!(g.is_connected());
    for s in [0, 13, 59] {
        let row = dijkstra(&net, s);
        for (t, d) in row.iter().enumerate() {
            assert!(close(g.directed()[(s, t)], *d));
        }
    }
}

#[test]
fn imputation_uses_twice_the_largest_finite_distance() {
    // two disconnected two-segment roads
    let base = path_network(4).unwrap();
    let doc = base.to_document();
    let mut segments = doc.segments.clone();
    segments[2].features = vec![10.0];
    let net = RoadNetwork::new(segments, vec![(0, 1), (2, 3)], None).unwrap();
    let g = geodesic_distances(&net);
    assert!(!g.is_connected());
    let imp = g.imputed();
    let max = g.max_finite();
    assert!(max > 0.0);
    assert_eq!(imp[(0, 3)], 2.0 * max);
    assert_eq!(imp[(1, 0)], g.distances()[(1, 0)]);
}

#[test]
fn path_and_triangle_embed_exactly() {
    let path = geodesic_distances(&path_network(8).unwrap()).imputed();
    let e = mds_embed(&path, 1).unwrap();
    assert!(e.stress() < 1e-9, "path stress {}", e.stress());
    let tri = geodesic_distances(&triangle_network().unwrap()).imputed();
    let e = mds_embed(&tri, 2).unwrap();
    assert!(e.stress() < 1e-9, "triangle stress {}", e.stress());
    assert!((e.distance(0, 1) - 2.0).abs() < 1e-9);
}

#[test]
fn euclidean_points_are_recovered() {
    let mut r = rng(3);
    use rand::Rng;
    let pts = DMatrix::from_fn(12, 3, |_, _| r.random_range(-2.0..2.0));
    let d = DMatrix::from_fn(12, 12, |i, j| (pts.row(i) - pts.row(j)).norm());
    assert_eq!(select_dimension(&d, 0.999_999).unwrap(), 3);
    let e = mds_embed(&d, 3).unwrap();
    assert!(e.stress() < 1e-12);
    assert!(stress(&d, e.coords()) < 1e-12);
}

#[test]
fn default_dimension_keeps_most_of_the_spectrum() {
    let d = geodesic_distances(&grid_network(60, 7).unwrap()).imputed();
    let dim = select_dimension(&d, DEFAULT_RETAINED_MASS).unwrap();
    assert!((1..60).contains(&dim));
}

#[test]
fn out_of_range_dimensions_are_rejected() {
    let d = geodesic_distances(&path_network(5).unwrap()).imputed();
    assert!(mds_embed(&d, 0).is_err());
    assert!(mds_embed(&d, 5).is_err());
    assert!(mds_embed(&d, 4).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn geodesics_are_a_symmetric_premetric(seed in 0u64..10_000) {
        let net = random_digraph(15, 2, seed).unwrap();
        let g = geodesic_distances(&net);
        let d = g.distances();
        for i in 0..15 {
            prop_assert_eq!(d[(i, i)], 0.0);
            for j in 0..15 {
                prop_assert_eq!(d[(i, j)], d[(j, i)]);
                prop_assert!(d[(i, j)] >= 0.0);
            }
        }
        // the directed matrix obeys the triangle inequality
        let dd = g.directed();
        for i in 0..15 {
            for j in 0..15 {
                for k in 0..15 {
                    prop_assert!(dd[(i, j)] <= dd[(i, k)] + dd[(k, j)] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn stress_never_grows_with_dimension(seed in 0u64..10_000) {
        let d = geodesic_distances(&random_digraph(14, 2, seed).unwrap()).imputed();
        let opts = MdsOptions { refine_sweeps: 5 };
        let mut prev = f64::INFINITY;
        for dim in 1..6 {
            let s = mds_embed_with(&d, dim, &opts).unwrap().stress();
            prop_assert!(s <= prev * (1.0 + 1e-12) + 1e-12);
            prev = s;
        }
    }

    #[test]
    fn kernel_matrices_are_symmetric_psd(seed in 0u64..10_000, n in 2usize..20) {
        let k = random_kernel(n, 2, seed);
        let idx: Vec<usize> = (0..n).collect();
        let m = k.covariance(&idx, &idx);
        prop_assert!(rel(&m, &oracle_cov(&k, &idx, &idx, false)) < 1e-12);
        prop_assert!(rel(&m, &m.transpose()) == 0.0);
        let eig = m.symmetric_eigenvalues();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-9 * k.signal_variance());
        let noisy = k.prior_covariance(&idx, &idx, true) - k.prior_covariance(&idx, &idx, false);
        prop_assert!(rel(&noisy, &(DMatrix::identity(n, n) * k.noise_variance())) < 1e-12);
    }
}
