mod common;

use std::collections::{BTreeSet, HashSet};

use common::*;
use proptest::prelude::*;
use rand::Rng;
use roadfusion::active::{
    bound_report, centralized_joint_walk, compute_xi, connected_components, enumerate_walks,
    max_entropy_joint_walk, plan_components, JointWalkModel, DEFAULT_SEARCH_BUDGET,
};
use roadfusion::fusion::{FusedPredictor, FusionContext};
use roadfusion::road_kernel::RoadNetwork;
use roadfusion::synthetic::random_digraph;

/// Walks built by breadth-first expansion of prefixes.
fn oracle_walks(net: &RoadNetwork, origin: usize, length: usize) -> BTreeSet<Vec<usize>> {
    let mut frontier = vec![vec![]];
    let mut done = BTreeSet::new();
    for _ in 0..length {
        let mut next = Vec::new();
        for p in frontier {
            let at = p.last().copied().unwrap_or(origin);
            let succ = net.out_neighbors(at);
            if succ.is_empty() {
                done.insert(p);
                continue;
            }
            for &s in succ {
                let mut q = p.clone();
                q.push(s);
                next.push(q);
            }
        }
        frontier = next;
    }
    done.extend(frontier);
    done
}

fn union_find_groups(adj: &[Vec<bool>]) -> BTreeSet<BTreeSet<usize>> {
    let n = adj.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for i in 0..n {
        for j in 0..n {
            if adj[i][j] || adj[j][i] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups = std::collections::BTreeMap::<usize, BTreeSet<usize>>::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().insert(i);
    }
    groups.into_values().collect()
}

#[test]
fn walk_enumeration_matches_breadth_first_oracle() {
    for seed in 0..8 {
        let net = random_digraph(20, 2, seed).unwrap();
        for origin in [0, 7, 19] {
            for length in 1..=4 {
                let walks = enumerate_walks(&net, origin, length).unwrap();
                let listed: Vec<Vec<usize>> = walks.iter().map(|w| w.steps.clone()).collect();
                let mut sorted = listed.clone();
                sorted.sort();
                assert_eq!(listed, sorted, "lexicographic order");
                let set: BTreeSet<Vec<usize>> = listed.into_iter().collect();
                assert_eq!(set, oracle_walks(&net, origin, length));
                assert!(walks.len() <= net.max_out_degree().pow(length as u32));
            }
        }
    }
}

#[test]
fn single_sensor_block_is_the_fused_posterior() {
    for seed in 0..6 {
        let inst = planning_instance(30, 3, 2, 6, 0.3, seed);
        let ctx = FusionContext::new(&inst.kernel, &inst.support).unwrap();
        let (global, model) = inst.fuse();
        let predictor = FusedPredictor::new(&ctx, &global).unwrap();
        for k in 0..3 {
            for w in 0..inst.walk_sets[k].len() {
                let segs = inst.walk_sets[k].induced_segments(w);
                let direct = predictor.posterior(&segs).unwrap().cov;
                let block = model.joint_covariance(&[k], &[w]);
                if segs.is_empty() {
                    assert_eq!(block.nrows(), 0);
                } else {
                    assert!(rel(&block, &direct) < 1e-10, "seed {seed} k {k} w {w}");
                }
            }
        }
    }
}

#[test]
fn joint_covariance_matches_entrywise_oracle() {
    for seed in 0..6 {
        let inst = planning_instance(30, 3, 2, 6, 0.3, seed);
        let (global, model) = inst.fuse();
        let sizes: Vec<usize> = inst.walk_sets.iter().map(|w| w.len()).collect();
        for choice in all_choices(&sizes).into_iter().step_by(3) {
            let got = model.joint_covariance(&[0, 1, 2], &choice);
            let want = inst.oracle_joint_cov(&global, &[0, 1, 2], &choice);
            assert!(rel(&got, &want) < 1e-9, "seed {seed} choice {choice:?}");
        }
    }
}

#[test]
fn centralized_search_matches_brute_force() {
    for seed in 0..8 {
        let inst = planning_instance(30, 3, 2, 6, 0.3, seed);
        let (global, model) = inst.fuse();
        let sizes: Vec<usize> = inst.walk_sets.iter().map(|w| w.len()).collect();
        let score = |c: &[usize]| {
            let h = oracle_entropy(&inst.oracle_joint_cov(&global, &[0, 1, 2], c));
            if h.is_nan() {
                f64::NEG_INFINITY
            } else {
                h
            }
        };
        let best = all_choices(&sizes)
            .iter()
            .map(|c| score(c))
            .fold(f64::NEG_INFINITY, f64::max);
        let got = centralized_joint_walk(&model, DEFAULT_SEARCH_BUDGET).unwrap();
        assert!(best.is_finite());
        assert!((score(&got.choice) - best).abs() < 1e-8, "seed {seed}");
        assert!((got.entropy - best).abs() < 1e-8, "seed {seed}");
    }
}

#[test]
fn xi_matches_explicit_inverses() {
    for seed in 0..6 {
        let inst = planning_instance(40, 3, 2, 6, 0.1, seed);
        let (global, model) = inst.fuse();
        let comps = model.coordination(1e-3).components;
        let got = match compute_xi(&model, &comps) {
            Ok(x) => x,
            Err(_) => continue,
        };
        let mut want = 0.0_f64;
        for g in &comps.groups {
            let sizes: Vec<usize> = g.iter().map(|&k| inst.walk_sets[k].len()).collect();
            for c in all_choices(&sizes) {
                let m = inst.oracle_joint_cov(&global, g, &c);
                if m.nrows() > 0 {
                    want = inv(&m).iter().fold(want, |a, v| a.max(v.abs()));
                }
            }
        }
        assert!(
            (got - want).abs() <= 1e-6 * want,
            "seed {seed}: {got} vs {want}"
        );
    }
}

#[test]
fn components_match_union_find() {
    let mut r = rng(5);
    for _ in 0..50 {
        let n = r.random_range(1..9);
        let mut adj = vec![vec![false; n]; n];
        for i in 0..n {
            adj[i][i] = true;
            for j in 0..i {
                let e = r.random_bool(0.25);
                adj[i][j] = e;
                adj[j][i] = e;
            }
        }
        let c = connected_components(&adj);
        let got: BTreeSet<BTreeSet<usize>> = c
            .groups
            .iter()
            .map(|g| g.iter().copied().collect())
            .collect();
        let want = union_find_groups(&adj);
        assert_eq!(got, want);
        assert_eq!(c.kappa, want.iter().map(|g| g.len()).max().unwrap());
    }
}

#[test]
fn isolated_sensors_plan_alone() {
    let inst = planning_instance(40, 3, 2, 6, 0.1, 1);
    let (_, model) = inst.fuse();
    let comps = model.coordination(10.0).components;
    assert_eq!(comps.kappa, 1);
    let plan = plan_components(&model, &comps, DEFAULT_SEARCH_BUDGET).unwrap();
    for k in 0..3 {
        let solo = max_entropy_joint_walk(&model, &[k], DEFAULT_SEARCH_BUDGET).unwrap();
        assert_eq!(plan[k], solo.choice[0]);
    }
}

#[test]
fn a_complete_graph_plans_centrally() {
    let inst = planning_instance(30, 3, 2, 6, 0.3, 2);
    let (_, model) = inst.fuse();
    let comps = model.coordination(0.0).components;
    if comps.kappa == 3 {
        let plan = plan_components(&model, &comps, DEFAULT_SEARCH_BUDGET).unwrap();
        let central = centralized_joint_walk(&model, DEFAULT_SEARCH_BUDGET).unwrap();
        assert_eq!(plan, central.choice);
    }
}

#[test]
fn search_budget_is_an_error_not_a_truncation() {
    let inst = planning_instance(30, 3, 3, 6, 0.3, 0);
    let (_, model) = inst.fuse();
    assert!(centralized_joint_walk(&model, 3).is_err());
}

#[test]
fn loss_bound_holds_whenever_it_applies() {
    let mut applied = 0;
    for seed in 0..30 {
        let inst = planning_instance(40, 3, 2, 6, 0.1, seed);
        let (_, model) = inst.fuse();
        for eps in [1e-2, 1e-3, 1e-4] {
            let comps = model.coordination(eps).components;
            let r = bound_report(&model, &comps, eps, 2, DEFAULT_SEARCH_BUDGET).unwrap();
            assert!(r.achieved_gap >= -1e-9);
            if let Some(ok) = r.satisfied(1e-9) {
                applied += 1;
                assert!(ok, "seed {seed} eps {eps}: {r:?}");
            }
        }
    }
    assert!(applied > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kappa_never_grows_with_epsilon(seed in 0u64..10_000) {
        let inst = planning_instance(30, 4, 2, 6, 0.3, seed);
        let (_, model) = inst.fuse();
        let mut prev = usize::MAX;
        for eps in [0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0] {
            let k = model.coordination(eps).kappa();
            prop_assert!(k <= prev);
            prop_assert!((1..=4).contains(&k));
            prev = k;
        }
    }

    #[test]
    fn decentralized_plans_never_beat_the_centralized_optimum(seed in 0u64..10_000) {
        let inst = planning_instance(30, 3, 2, 6, 0.3, seed);
        let (_, model) = inst.fuse();
        let best = centralized_joint_walk(&model, DEFAULT_SEARCH_BUDGET).unwrap();
        for eps in [1e-3, 0.1, 2.0] {
            let comps = model.coordination(eps).components;
            let plan = plan_components(&model, &comps, DEFAULT_SEARCH_BUDGET).unwrap();
            let h = model.entropy(&[0, 1, 2], &plan).unwrap();
            prop_assert!(h <= best.entropy + 1e-9);
        }
    }

    #[test]
    fn candidates_exclude_observed_segments(seed in 0u64..10_000) {
        let inst = planning_instance(30, 3, 3, 6, 0.3, seed);
        let observed: HashSet<usize> = inst.blocks.iter().flat_map(|b| b.indices().to_vec()).collect();
        for ws in &inst.walk_sets {
            for s in &ws.candidates {
                prop_assert!(!observed.contains(s));
            }
            for w in 0..ws.len() {
                let segs = ws.induced_segments(w);
                prop_assert!(segs.iter().all(|s| ws.walks[w].steps.contains(s)));
            }
        }
    }
}
