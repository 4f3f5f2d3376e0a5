//! Instance builders and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roadfusion::gp::ObservationSet;
use roadfusion::road_kernel::{EmbeddedKernel, Embedding, KernelHyperparams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kernel over `n` points drawn uniformly from `[0, 4]^dim`.
pub fn random_kernel(n: usize, dim: usize, seed: u64) -> EmbeddedKernel {
    let mut r = rng(seed);
    let coords = DMatrix::from_fn(n, dim, |_, _| r.random_range(0.0..4.0));
    let ls: Vec<f64> = (0..dim).map(|_| r.random_range(0.8..2.0)).collect();
    let sv = r.random_range(0.5..2.0);
    let noise = r.random_range(0.01..0.2);
    let mean = r.random_range(-1.0..1.0);
    let emb = Arc::new(Embedding::from_coords(coords).unwrap());
    EmbeddedKernel::with_constant_mean(emb, KernelHyperparams::new(sv, ls, noise).unwrap(), mean)
        .unwrap()
}

/// Squared-exponential covariance computed straight from the coordinates.
pub fn oracle_cov(k: &EmbeddedKernel, a: &[usize], b: &[usize], noise: bool) -> DMatrix<f64> {
    let c = k.embedding().coords();
    let h = k.hyper();
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        let sq: f64 = (0..c.ncols())
            .map(|d| ((c[(a[i], d)] - c[(b[j], d)]) / h.length_scales[d]).powi(2))
            .sum();
        let mut v = h.signal_variance * (-0.5 * sq).exp();
        if noise && a[i] == b[j] {
            v += h.noise_variance;
        }
        v
    })
}

pub fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("invertible")
}

/// `K` disjoint observation blocks over `0..n` with random values.
pub fn random_blocks(n: usize, sizes: &[usize], seed: u64) -> Vec<ObservationSet> {
    let mut r = rng(seed);
    let total: usize = sizes.iter().sum();
    let picked = sample(&mut r, n, total).into_vec();
    let mut out = Vec::new();
    let mut at = 0;
    for &s in sizes {
        let idx = picked[at..at + s].to_vec();
        let vals = (0..s).map(|_| r.random_range(-2.0..2.0)).collect();
        out.push(ObservationSet::new(idx, vals).unwrap());
        at += s;
    }
    out
}

/// Segments of `0..n` not listed in `used`, ascending.
pub fn complement(n: usize, used: &[usize]) -> Vec<usize> {
    (0..n).filter(|s| !used.contains(s)).collect()
}

/// `½ log((2πe)^n det m)` through a cofactor-free LU determinant.
pub fn oracle_entropy(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() as f64;
    if m.nrows() == 0 {
        return 0.0;
    }
    0.5 * (n * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + m.determinant().ln())
}

/// Largest entry-wise difference relative to the largest reference entry.
pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    (a - b).iter().fold(0.0_f64, |m, v| m.max(v.abs())) / scale
}

pub fn rel_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    (a - b).iter().fold(0.0_f64, |m, v| m.max(v.abs())) / scale
}

/// A random road network with a kernel, support set, one reading per
/// sensor at its origin and each sensor's candidate walks.
pub struct PlanningInstance {
    pub net: roadfusion::road_kernel::RoadNetwork,
    pub kernel: EmbeddedKernel,
    pub support: roadfusion::fusion::SupportSet,
    pub blocks: Vec<ObservationSet>,
    pub walk_sets: Vec<roadfusion::active::WalkSet>,
}

pub fn planning_instance(
    n: usize,
    sensors: usize,
    length: usize,
    support_len: usize,
    length_scale: f64,
    seed: u64,
) -> PlanningInstance {
    let mut r = rng(seed);
    let net = roadfusion::synthetic::random_digraph(n, 2, seed).unwrap();
    let coords = DMatrix::from_fn(n, 2, |_, _| r.random_range(0.0..1.0));
    let emb = Arc::new(Embedding::from_coords(coords).unwrap());
    let hyper = KernelHyperparams::isotropic(1.0, length_scale, 2, 0.01).unwrap();
    let kernel = EmbeddedKernel::with_constant_mean(emb, hyper, 0.0).unwrap();
    let origins = sample(&mut r, n, sensors).into_vec();
    let blocks: Vec<ObservationSet> = origins
        .iter()
        .map(|&o| ObservationSet::new(vec![o], vec![r.random_range(-1.0..1.0)]).unwrap())
        .collect();
    let support =
        roadfusion::fusion::SupportSet::new(sample(&mut r, n, support_len).into_vec()).unwrap();
    let observed: std::collections::HashSet<usize> = origins.iter().copied().collect();
    let walk_sets = origins
        .iter()
        .enumerate()
        .map(|(k, &o)| roadfusion::active::WalkSet::new(&net, k, o, length, &observed).unwrap())
        .collect();
    PlanningInstance {
        net,
        kernel,
        support,
        blocks,
        walk_sets,
    }
}

impl PlanningInstance {
    /// Global summary and the fused joint-walk model built from it.
    pub fn fuse(
        &self,
    ) -> (
        roadfusion::fusion::GlobalSummary,
        roadfusion::active::FusedJointModel,
    ) {
        use roadfusion::fusion::*;
        let ctx = FusionContext::new(&self.kernel, &self.support).unwrap();
        let locals: Vec<_> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| local_summary(&ctx, k as u64, b).unwrap())
            .collect();
        let global = global_summary(&ctx, &locals).unwrap();
        let predictor = FusedPredictor::new(&ctx, &global).unwrap();
        let model =
            roadfusion::active::FusedJointModel::new(&predictor, self.walk_sets.clone()).unwrap();
        (global, model)
    }

    /// Joint covariance of a joint walk written out entry by entry: a
    /// segment pair from the same sensor gets the prior covariance
    /// conditioned on the support, every pair gets `Σ_aU Σ̈⁻¹ Σ_Ub`.
    pub fn oracle_joint_cov(
        &self,
        global: &roadfusion::fusion::GlobalSummary,
        sensors: &[usize],
        choice: &[usize],
    ) -> DMatrix<f64> {
        let u = self.support.indices();
        let uu_inv = inv(&oracle_cov(&self.kernel, u, u, false));
        let g_inv = inv(&global.s_ddot);
        let entries: Vec<(usize, usize)> = sensors
            .iter()
            .zip(choice)
            .flat_map(|(&k, &w)| {
                self.walk_sets[k]
                    .induced_segments(w)
                    .into_iter()
                    .map(move |s| (k, s))
            })
            .collect();
        DMatrix::from_fn(entries.len(), entries.len(), |i, j| {
            let (ka, a) = entries[i];
            let (kb, b) = entries[j];
            let au = oracle_cov(&self.kernel, &[a], u, false);
            let ub = oracle_cov(&self.kernel, u, &[b], false);
            let mut v = (&au * &g_inv * &ub)[(0, 0)];
            if ka == kb {
                v += oracle_cov(&self.kernel, &[a], &[b], false)[(0, 0)]
                    - (&au * &uu_inv * &ub)[(0, 0)];
            }
            v
        })
    }
}

/// Every combination of one walk index per sensor, last sensor fastest.
pub fn all_choices(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|c| {
                (0..s).map(move |w| {
                    let mut c = c.clone();
                    c.push(w);
                    c
                })
            })
            .collect();
    }
    out
}
