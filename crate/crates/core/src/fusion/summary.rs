use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gp::{check_domain, GaussianBelief, ObservationSet};
use crate::linalg::{symmetrized, Factor};
use crate::road_kernel::EmbeddedKernel;

pub type SensorId = u64;

/// The support set `U` shared by every sensor. It need not be observed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    indices: Vec<usize>,
    hash: u64,
}

impl SupportSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSupport("support set is empty".into()));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        if let Some(dup) = indices.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::InvalidSupport(format!("segment {dup} listed twice")));
        }
        let mut hasher = Sha256::new();
        hasher.update((indices.len() as u64).to_le_bytes());
        for &s in &indices {
            hasher.update((s as u64).to_le_bytes());
        }
        let digest = hasher.finalize();
        let hash = u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"));
        Ok(SupportSet { indices, hash })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// First 8 bytes of SHA-256 over the little-endian index list.
    pub fn content_hash(&self) -> u64 {
        self.hash
    }
}

/// Kernel, support set and the factor of the noise-free `Σ_UU`, shared by
/// every fusion step that uses the same prior.
#[derive(Clone, Debug)]
pub struct FusionContext<'a> {
    kernel: &'a EmbeddedKernel,
    support: &'a SupportSet,
    prior_uu: DMatrix<f64>,
    prior_factor: Factor,
}

impl<'a> FusionContext<'a> {
    pub fn new(kernel: &'a EmbeddedKernel, support: &'a SupportSet) -> Result<Self> {
        check_domain(kernel, support.indices())?;
        let u = support.indices();
        let prior_uu = kernel.covariance(u, u);
        let prior_factor = Factor::new(&prior_uu, kernel.signal_variance())?;
        Ok(FusionContext {
            kernel,
            support,
            prior_uu,
            prior_factor,
        })
    }

    pub fn kernel(&self) -> &EmbeddedKernel {
        self.kernel
    }

    pub fn support(&self) -> &SupportSet {
        self.support
    }

    /// Noise-free `Σ_UU`.
    pub fn prior_uu(&self) -> &DMatrix<f64> {
        &self.prior_uu
    }

    pub fn prior_factor(&self) -> &Factor {
        &self.prior_factor
    }

    /// `Σ_{YY|U} = Σ_YY − Σ_YU Σ_UU⁻¹ Σ_UY` (noise-free).
    pub fn conditional_covariance(&self, targets: &[usize]) -> DMatrix<f64> {
        let a = self
            .prior_factor
            .solve_lower(&self.kernel.covariance(self.support.indices(), targets));
        symmetrized(&(self.kernel.covariance(targets, targets) - a.tr_mul(&a)))
    }
}

/// One sensor's compressed observations: `ż_U^k` and `Σ̇_UU^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSummary {
    pub sensor_id: SensorId,
    pub z_dot: DVector<f64>,
    pub s_dot: DMatrix<f64>,
    pub obs_count: usize,
    pub support_hash: u64,
}

impl LocalSummary {
    pub fn support_len(&self) -> usize {
        self.z_dot.len()
    }

    pub fn message_size(&self) -> MessageSize {
        summary_message_size(self.support_len())
    }
}

/// `ż_U^k = Σ_UD (Σ_DD|U)⁻¹ (z_D − μ_D)` and `Σ̇_UU^k = Σ_UD (Σ_DD|U)⁻¹ Σ_DU`
/// with `D = D_k` and `Σ_DD|U` carrying the observation noise.
pub fn local_summary(
    ctx: &FusionContext<'_>,
    sensor_id: SensorId,
    obs: &ObservationSet,
) -> Result<LocalSummary> {
    let kernel = ctx.kernel;
    let u = ctx.support.indices();
    let m = u.len();
    if obs.is_empty() {
        return Ok(LocalSummary {
            sensor_id,
            z_dot: DVector::zeros(m),
            s_dot: DMatrix::zeros(m, m),
            obs_count: 0,
            support_hash: ctx.support.content_hash(),
        });
    }
    let d = obs.indices();
    check_domain(kernel, d)?;
    let cross_ud = kernel.covariance(u, d);
    let v = ctx.prior_factor.solve_lower(&cross_ud);
    let conditional = symmetrized(&(kernel.noisy_covariance(d) - v.tr_mul(&v)));
    let factor = Factor::new(&conditional, kernel.signal_variance())?;
    let w = factor.solve_lower(&cross_ud.transpose());
    let resid = DVector::from_column_slice(obs.values()) - kernel.mean_of(d);
    let wr = factor.solve_lower_vec(&resid);
    Ok(LocalSummary {
        sensor_id,
        z_dot: w.tr_mul(&wr),
        s_dot: symmetrized(&w.tr_mul(&w)),
        obs_count: obs.len(),
        support_hash: ctx.support.content_hash(),
    })
}

/// Running sum of local summaries (the two sums of the global summary
/// without the prior term). Merging partial sums is how a reduce tree or a
/// relay would combine them.
#[derive(Clone, Debug, PartialEq)]
pub struct SummarySum {
    pub z: DVector<f64>,
    pub s: DMatrix<f64>,
    pub contributors: Vec<SensorId>,
    pub support_hash: u64,
}

impl SummarySum {
    pub fn new(support: &SupportSet) -> Self {
        let m = support.len();
        SummarySum {
            z: DVector::zeros(m),
            s: DMatrix::zeros(m, m),
            contributors: Vec::new(),
            support_hash: support.content_hash(),
        }
    }

    pub fn add(&mut self, summary: &LocalSummary) -> Result<()> {
        if summary.support_hash != self.support_hash || summary.support_len() != self.z.len() {
            return Err(Error::InvalidSupport(format!(
                "summary from sensor {} was built on a different support set",
                summary.sensor_id
            )));
        }
        if self.contributors.contains(&summary.sensor_id) {
            return Err(Error::InvalidSupport(format!(
                "sensor {} contributed twice",
                summary.sensor_id
            )));
        }
        self.z += &summary.z_dot;
        self.s += &summary.s_dot;
        self.contributors.push(summary.sensor_id);
        Ok(())
    }

    pub fn merge(mut self, other: SummarySum) -> Result<Self> {
        if other.support_hash != self.support_hash {
            return Err(Error::InvalidSupport(
                "merging sums over different support sets".into(),
            ));
        }
        if other
            .contributors
            .iter()
            .any(|c| self.contributors.contains(c))
        {
            return Err(Error::InvalidSupport(
                "merging sums with a shared contributor".into(),
            ));
        }
        self.z += other.z;
        self.s += other.s;
        self.contributors.extend(other.contributors);
        Ok(self)
    }
}

/// `z̈_U = Σ_k ż_U^k` and `Σ̈_UU = Σ_UU + Σ_k Σ̇_UU^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalSummary {
    pub z_ddot: DVector<f64>,
    pub s_ddot: DMatrix<f64>,
    /// Contributing sensors, ascending.
    pub contributors: Vec<SensorId>,
    pub support_hash: u64,
}

impl GlobalSummary {
    pub fn from_sum(ctx: &FusionContext<'_>, mut sum: SummarySum) -> Result<Self> {
        if sum.support_hash != ctx.support.content_hash() {
            return Err(Error::InvalidSupport(
                "sum was built on a different support set".into(),
            ));
        }
        sum.contributors.sort_unstable();
        Ok(GlobalSummary {
            z_ddot: sum.z,
            s_ddot: ctx.prior_uu() + sum.s,
            contributors: sum.contributors,
            support_hash: sum.support_hash,
        })
    }
}

/// Sum the summaries in ascending sensor-id order, whatever order they arrive in.
pub fn global_summary(
    ctx: &FusionContext<'_>,
    summaries: &[LocalSummary],
) -> Result<GlobalSummary> {
    let mut ordered: Vec<&LocalSummary> = summaries.iter().collect();
    ordered.sort_by_key(|s| s.sensor_id);
    let mut sum = SummarySum::new(ctx.support);
    for s in ordered {
        sum.add(s)?;
    }
    GlobalSummary::from_sum(ctx, sum)
}

/// Prediction from a global summary. Holds the factor `Ψ` of `Σ̈_UU`
/// (`Σ̈_UU = Ψ Ψᵀ`) and the weights `Σ̈_UU⁻¹ z̈_U`.
#[derive(Clone, Debug)]
pub struct FusedPredictor<'a> {
    ctx: FusionContext<'a>,
    global_factor: Factor,
    weights: DVector<f64>,
}

impl<'a> FusedPredictor<'a> {
    pub fn new(ctx: &FusionContext<'a>, global: &GlobalSummary) -> Result<Self> {
        if global.support_hash != ctx.support.content_hash()
            || global.z_ddot.len() != ctx.support.len()
        {
            return Err(Error::InvalidSupport(
                "global summary does not match the support set".into(),
            ));
        }
        let global_factor = Factor::new(&global.s_ddot, ctx.kernel.signal_variance())?;
        let weights = global_factor.solve_vec(&global.z_ddot);
        Ok(FusedPredictor {
            ctx: ctx.clone(),
            global_factor,
            weights,
        })
    }

    pub fn context(&self) -> &FusionContext<'a> {
        &self.ctx
    }

    /// Lower-triangular `Ψ`.
    pub fn psi(&self) -> DMatrix<f64> {
        self.global_factor.lower()
    }

    /// `μ̄_Y = μ_Y + Σ_YU Σ̈_UU⁻¹ z̈_U`.
    pub fn mean(&self, targets: &[usize]) -> Result<DVector<f64>> {
        check_domain(self.ctx.kernel, targets)?;
        let k = self.ctx.kernel;
        Ok(k.mean_of(targets) + k.covariance(targets, self.ctx.support.indices()) * &self.weights)
    }

    /// `Φ`: one column `Ψ \ Σ_Us` per target segment.
    pub fn phi(&self, targets: &[usize]) -> Result<DMatrix<f64>> {
        check_domain(self.ctx.kernel, targets)?;
        Ok(self.global_factor.solve_lower(
            &self
                .ctx
                .kernel
                .covariance(self.ctx.support.indices(), targets),
        ))
    }

    /// Full predictive distribution:
    /// `Σ̄_YY = Σ_YY − Σ_YU (Σ_UU⁻¹ − Σ̈_UU⁻¹) Σ_UY`.
    pub fn posterior(&self, targets: &[usize]) -> Result<GaussianBelief> {
        check_domain(self.ctx.kernel, targets)?;
        let k = self.ctx.kernel;
        let cross = k.covariance(self.ctx.support.indices(), targets);
        let a = self.ctx.prior_factor.solve_lower(&cross);
        let b = self.global_factor.solve_lower(&cross);
        let cov = k.covariance(targets, targets) - a.tr_mul(&a) + b.tr_mul(&b);
        Ok(GaussianBelief {
            mean: k.mean_of(targets) + cross.tr_mul(&self.weights),
            cov: symmetrized(&cov),
            index_set: targets.to_vec(),
        })
    }
}

/// Predictive distribution over `targets` from a global summary.
pub fn fused_posterior(
    ctx: &FusionContext<'_>,
    global: &GlobalSummary,
    targets: &[usize],
) -> Result<GaussianBelief> {
    FusedPredictor::new(ctx, global)?.posterior(targets)
}

/// Size of one serialized local summary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MessageSize {
    pub header_words: usize,
    /// `|U|` entries of `ż` plus the `|U|(|U|+1)/2` lower triangle of `Σ̇`.
    pub payload_scalars: usize,
}

impl MessageSize {
    pub fn total_words(&self) -> usize {
        self.header_words + self.payload_scalars
    }
}

pub fn summary_message_size(support_len: usize) -> MessageSize {
    MessageSize {
        header_words: super::wire::SUMMARY_HEADER_WORDS,
        payload_scalars: support_len + support_len * (support_len + 1) / 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road_kernel::{Embedding, KernelHyperparams};
    use std::sync::Arc;

    fn kernel() -> EmbeddedKernel {
        let xs = [0.0, 0.6, 1.3, 2.0, 2.4, 3.1, 4.0];
        let emb = Arc::new(Embedding::from_coords(DMatrix::from_column_slice(7, 1, &xs)).unwrap());
        EmbeddedKernel::with_constant_mean(
            emb,
            KernelHyperparams::isotropic(1.7, 0.9, 1, 0.2).unwrap(),
            0.4,
        )
        .unwrap()
    }

    #[test]
    fn support_set_validation_and_hash() {
        assert!(SupportSet::new(vec![]).is_err());
        assert!(SupportSet::new(vec![1, 1]).is_err());
        let a = SupportSet::new(vec![1, 2]).unwrap();
        assert_eq!(
            a.content_hash(),
            SupportSet::new(vec![1, 2]).unwrap().content_hash()
        );
        assert_ne!(
            a.content_hash(),
            SupportSet::new(vec![2, 1]).unwrap().content_hash()
        );
    }

    #[test]
    fn empty_sensor_summary_is_zero() {
        let k = kernel();
        let u = SupportSet::new(vec![1, 4]).unwrap();
        let ctx = FusionContext::new(&k, &u).unwrap();
        let s = local_summary(&ctx, 3, &ObservationSet::empty()).unwrap();
        assert_eq!(s.z_dot, DVector::zeros(2));
        assert_eq!(s.s_dot, DMatrix::zeros(2, 2));
        assert_eq!(s.obs_count, 0);
    }

    #[test]
    fn scalar_summary_by_hand() {
        let k = kernel();
        let u = SupportSet::new(vec![2]).unwrap();
        let ctx = FusionContext::new(&k, &u).unwrap();
        let z = 1.9;
        let s = local_summary(&ctx, 0, &ObservationSet::new(vec![5], vec![z]).unwrap()).unwrap();
        let s_ud = k.value(2, 5);
        let cond = k.value(5, 5) + k.noise_variance() - s_ud * s_ud / k.value(2, 2);
        assert!((s.z_dot[0] - s_ud * (z - 0.4) / cond).abs() < 1e-12);
        assert!((s.s_dot[(0, 0)] - s_ud * s_ud / cond).abs() < 1e-12);
    }

    #[test]
    fn single_sensor_global_and_order_independence() {
        let k = kernel();
        let u = SupportSet::new(vec![1, 3, 5]).unwrap();
        let ctx = FusionContext::new(&k, &u).unwrap();
        let a = local_summary(
            &ctx,
            0,
            &ObservationSet::new(vec![0, 2], vec![1.0, 0.1]).unwrap(),
        )
        .unwrap();
        let b = local_summary(&ctx, 1, &ObservationSet::new(vec![6], vec![-0.3]).unwrap()).unwrap();
        let c = local_summary(
            &ctx,
            2,
            &ObservationSet::new(vec![4, 5], vec![0.7, 0.9]).unwrap(),
        )
        .unwrap();

        let g1 = global_summary(&ctx, std::slice::from_ref(&a)).unwrap();
        assert_eq!(g1.z_ddot, a.z_dot);
        assert_eq!(g1.s_ddot, ctx.prior_uu() + &a.s_dot);

        let forward = global_summary(&ctx, &[a.clone(), b.clone(), c.clone()]).unwrap();
        let shuffled = global_summary(&ctx, &[c.clone(), a.clone(), b.clone()]).unwrap();
        assert_eq!(forward, shuffled);
        assert_eq!(forward.contributors, vec![0, 1, 2]);
        assert!(global_summary(&ctx, &[a.clone(), a]).is_err());
    }

    #[test]
    fn mismatched_support_is_rejected() {
        let k = kernel();
        let u1 = SupportSet::new(vec![1, 3]).unwrap();
        let u2 = SupportSet::new(vec![1, 4]).unwrap();
        let c1 = FusionContext::new(&k, &u1).unwrap();
        let c2 = FusionContext::new(&k, &u2).unwrap();
        let s = local_summary(&c1, 0, &ObservationSet::new(vec![0], vec![1.0]).unwrap()).unwrap();
        assert!(global_summary(&c2, &[s]).is_err());
    }

    #[test]
    fn no_observations_predicts_prior() {
        let k = kernel();
        let u = SupportSet::new(vec![0, 3, 6]).unwrap();
        let ctx = FusionContext::new(&k, &u).unwrap();
        let empty: Vec<LocalSummary> = (0..3)
            .map(|id| local_summary(&ctx, id, &ObservationSet::empty()).unwrap())
            .collect();
        let g = global_summary(&ctx, &empty).unwrap();
        assert_eq!(g.z_ddot, DVector::zeros(3));
        assert_eq!(&g.s_ddot, ctx.prior_uu());
        let post = fused_posterior(&ctx, &g, &[1, 2, 5]).unwrap();
        let prior = k.covariance(&[1, 2, 5], &[1, 2, 5]);
        assert!((post.cov - prior).abs().max() < 1e-12);
        assert!((post.mean - k.mean_of(&[1, 2, 5])).abs().max() < 1e-15);
    }

    #[test]
    fn message_sizes() {
        assert_eq!(summary_message_size(64).payload_scalars, 64 + 2080);
        assert_eq!(summary_message_size(1).payload_scalars, 2);
        assert_eq!(summary_message_size(4).payload_scalars, 14);
    }
}
