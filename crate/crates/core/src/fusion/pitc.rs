use nalgebra::{DMatrix, DVector};

use super::summary::SupportSet;
use crate::error::Result;
use crate::gp::{check_domain, GaussianBelief, ObservationSet};
use crate::linalg::{symmetrized, Factor};
use crate::road_kernel::EmbeddedKernel;

/// Block-diagonal `Λ`: block `k` is `Σ_{D_kD_k|U}` (noise on the diagonal),
/// every entry between different blocks is exactly zero.
pub fn pitc_lambda(
    kernel: &EmbeddedKernel,
    support: &SupportSet,
    blocks: &[ObservationSet],
) -> Result<DMatrix<f64>> {
    let u = support.indices();
    check_domain(kernel, u)?;
    let prior = Factor::new(&kernel.covariance(u, u), kernel.signal_variance())?;
    let total: usize = blocks.iter().map(ObservationSet::len).sum();
    let mut lambda = DMatrix::zeros(total, total);
    let mut offset = 0;
    for block in blocks {
        let d = block.indices();
        check_domain(kernel, d)?;
        let g = prior.solve_lower(&kernel.covariance(u, d));
        let cond = kernel.noisy_covariance(d) - g.tr_mul(&g);
        lambda
            .view_mut((offset, offset), (d.len(), d.len()))
            .copy_from(&cond);
        offset += d.len();
    }
    Ok(symmetrized(&lambda))
}

/// Centralized partially-independent-training-conditional prediction:
/// `μ_Y + Γ_YD (Γ_DD + Λ)⁻¹ (z_D − μ_D)` and `Σ_YY − Γ_YD (Γ_DD + Λ)⁻¹ Γ_DY`
/// with `Γ_BB' = Σ_BU Σ_UU⁻¹ Σ_UB'`. The whole `|D| × |D|` system is assembled.
pub fn pitc_posterior(
    kernel: &EmbeddedKernel,
    support: &SupportSet,
    blocks: &[ObservationSet],
    targets: &[usize],
) -> Result<GaussianBelief> {
    check_domain(kernel, targets)?;
    let u = support.indices();
    let pooled = ObservationSet::pooled(blocks);
    let d = pooled.indices();
    check_domain(kernel, d)?;
    let prior_mean = kernel.mean_of(targets);
    let prior_cov = kernel.covariance(targets, targets);
    if d.is_empty() {
        return Ok(GaussianBelief {
            mean: prior_mean,
            cov: prior_cov,
            index_set: targets.to_vec(),
        });
    }

    let prior_uu = Factor::new(&kernel.covariance(u, u), kernel.signal_variance())?;
    let g_d = prior_uu.solve_lower(&kernel.covariance(u, d));
    let g_y = prior_uu.solve_lower(&kernel.covariance(u, targets));
    let gamma_dd = g_d.tr_mul(&g_d);
    let gamma_yd = g_y.tr_mul(&g_d);

    let system = symmetrized(&(gamma_dd + pitc_lambda(kernel, support, blocks)?));
    let factor = Factor::new(&system, kernel.signal_variance())?;
    let resid = DVector::from_column_slice(pooled.values()) - kernel.mean_of(d);
    let mean = prior_mean + &gamma_yd * factor.solve_vec(&resid);
    let cov = prior_cov - &gamma_yd * factor.solve(&gamma_yd.transpose());
    Ok(GaussianBelief {
        mean,
        cov: symmetrized(&cov),
        index_set: targets.to_vec(),
    })
}
