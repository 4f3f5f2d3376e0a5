//! Exact Gaussian-process regression over road segments, plus the
//! subset-of-data approximation, greedy variance-based subset selection and
//! seeded sampling of ground-truth fields.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{gaussian_entropy, symmetrized, Factor};
use crate::road_kernel::EmbeddedKernel;

/// Observed segments `D` and their measurements `z_D`, aligned.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservationSet {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl ObservationSet {
    /// Indices must be unique and values finite.
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: indices.len(),
                right: values.len(),
            });
        }
        let mut seen = HashSet::with_capacity(indices.len());
        if let Some(dup) = indices.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::InvalidObservations(format!(
                "segment {dup} observed twice"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidObservations("non-finite measurement".into()));
        }
        Ok(ObservationSet { indices, values })
    }

    pub fn empty() -> Self {
        ObservationSet::default()
    }

    /// Concatenation of several sets. Unlike [`ObservationSet::new`] the
    /// result may list a segment more than once, one entry per independent
    /// noisy reading taken by different sensors.
    pub fn pooled<'a>(sets: impl IntoIterator<Item = &'a ObservationSet>) -> Self {
        let mut out = ObservationSet::default();
        for set in sets {
            out.indices.extend_from_slice(&set.indices);
            out.values.extend_from_slice(&set.values);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, segment: usize) -> bool {
        self.indices.contains(&segment)
    }

    /// Append one measurement; fails if the segment is already present.
    pub fn push(&mut self, segment: usize, value: f64) -> Result<()> {
        if self.contains(segment) {
            return Err(Error::InvalidObservations(format!(
                "segment {segment} observed twice"
            )));
        }
        if !value.is_finite() {
            return Err(Error::InvalidObservations("non-finite measurement".into()));
        }
        self.indices.push(segment);
        self.values.push(value);
        Ok(())
    }

    /// Entries whose segment is in `segments`, in their original order.
    pub fn restricted_to(&self, segments: &[usize]) -> ObservationSet {
        let keep: HashSet<usize> = segments.iter().copied().collect();
        let (indices, values) = self
            .indices
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| keep.contains(s))
            .map(|(s, v)| (*s, *v))
            .unzip();
        ObservationSet { indices, values }
    }

    pub fn mean_value(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.values.iter().sum::<f64>() / self.len() as f64)
    }
}

/// A Gaussian over the segments in `index_set`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub index_set: Vec<usize>,
}

impl GaussianBelief {
    pub fn variances(&self) -> DVector<f64> {
        self.cov.diagonal()
    }

    /// Predictive distribution of fresh noisy measurements: adds `σ_n² I`.
    pub fn with_observation_noise(mut self, noise_variance: f64) -> Self {
        for i in 0..self.cov.nrows() {
            self.cov[(i, i)] += noise_variance;
        }
        self
    }
}

pub(crate) fn check_domain(kernel: &EmbeddedKernel, segments: &[usize]) -> Result<()> {
    match segments.iter().find(|&&s| s >= kernel.len()) {
        Some(bad) => Err(Error::InvalidObservations(format!(
            "segment {bad} is outside the {}-segment domain",
            kernel.len()
        ))),
        None => Ok(()),
    }
}

/// Posterior over `targets` given noisy observations:
/// `μ_{Y|D} = μ_Y + Σ_YD Σ_DD⁻¹ (z_D − μ_D)` and
/// `Σ_{YY|D} = Σ_YY − Σ_YD Σ_DD⁻¹ Σ_DY`, where `Σ_DD` carries the noise.
/// The returned covariance is the latent (noise-free) one.
pub fn gp_posterior(
    kernel: &EmbeddedKernel,
    obs: &ObservationSet,
    targets: &[usize],
) -> Result<GaussianBelief> {
    check_domain(kernel, obs.indices())?;
    check_domain(kernel, targets)?;
    let prior_mean = kernel.mean_of(targets);
    let prior_cov = kernel.covariance(targets, targets);
    if obs.is_empty() {
        return Ok(GaussianBelief {
            mean: prior_mean,
            cov: prior_cov,
            index_set: targets.to_vec(),
        });
    }
    let d = obs.indices();
    let factor = Factor::new(&kernel.noisy_covariance(d), kernel.signal_variance())?;
    let cross = kernel.covariance(d, targets);
    let a = factor.solve_lower(&cross);
    let resid = DVector::from_column_slice(obs.values()) - kernel.mean_of(d);
    let w = factor.solve_lower_vec(&resid);
    Ok(GaussianBelief {
        mean: prior_mean + a.tr_mul(&w),
        cov: symmetrized(&(prior_cov - a.tr_mul(&a))),
        index_set: targets.to_vec(),
    })
}

/// Posterior mean only; skips the `|Y|²` covariance work.
pub fn posterior_mean(
    kernel: &EmbeddedKernel,
    obs: &ObservationSet,
    targets: &[usize],
) -> Result<DVector<f64>> {
    check_domain(kernel, obs.indices())?;
    check_domain(kernel, targets)?;
    let prior_mean = kernel.mean_of(targets);
    if obs.is_empty() {
        return Ok(prior_mean);
    }
    let d = obs.indices();
    let factor = Factor::new(&kernel.noisy_covariance(d), kernel.signal_variance())?;
    let resid = DVector::from_column_slice(obs.values()) - kernel.mean_of(d);
    let alpha = factor.solve_vec(&resid);
    Ok(prior_mean + kernel.covariance(targets, d) * alpha)
}

/// `½ log((2πe)^|Y| |Σ|)` of a belief; zero for an empty index set.
pub fn joint_entropy(belief: &GaussianBelief) -> Result<f64> {
    let scale = belief.cov.diagonal().iter().fold(0.0_f64, |m, v| m.max(*v));
    gaussian_entropy(&belief.cov, scale)
}

/// Subset-of-data posterior: exact regression on the observations whose
/// segment lies in `subset`, which must be drawn from `D`.
pub fn sod_posterior(
    kernel: &EmbeddedKernel,
    obs: &ObservationSet,
    subset: &[usize],
    targets: &[usize],
) -> Result<GaussianBelief> {
    let observed: HashSet<usize> = obs.indices().iter().copied().collect();
    if let Some(bad) = subset.iter().find(|s| !observed.contains(s)) {
        return Err(Error::InvalidSupport(format!(
            "subset segment {bad} has not been observed"
        )));
    }
    gp_posterior(kernel, &obs.restricted_to(subset), targets)
}

/// Greedily pick `m` of the candidate segments, each time taking the one
/// with the largest noise-free posterior variance given those already
/// picked. Ties go to the lowest segment index; duplicates are ignored.
pub fn greedy_select(
    kernel: &EmbeddedKernel,
    candidates: &[usize],
    m: usize,
) -> Result<Vec<usize>> {
    check_domain(kernel, candidates)?;
    let mut cands = candidates.to_vec();
    cands.sort_unstable();
    cands.dedup();
    if m > cands.len() {
        return Err(Error::InvalidSupport(format!(
            "cannot select {m} of {} distinct candidates",
            cands.len()
        )));
    }
    let n = cands.len();
    let mut var: Vec<f64> = cands.iter().map(|&c| kernel.value(c, c)).collect();
    let mut taken = vec![false; n];
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut selected = Vec::with_capacity(m);
    for _ in 0..m {
        let mut pick = None;
        for i in 0..n {
            if !taken[i] && pick.is_none_or(|p: usize| var[i] > var[p]) {
                pick = Some(i);
            }
        }
        let p = pick.expect("m <= number of candidates");
        taken[p] = true;
        selected.push(cands[p]);
        let pivot = var[p];
        let mut row = vec![0.0; n];
        if pivot > 1e-14 * kernel.signal_variance() {
            let root = pivot.sqrt();
            for i in 0..n {
                if taken[i] {
                    continue;
                }
                let mut v = kernel.value(cands[i], cands[p]);
                for prev in &rows {
                    v -= prev[i] * prev[p];
                }
                row[i] = v / root;
                var[i] = (var[i] - row[i] * row[i]).max(0.0);
            }
        }
        rows.push(row);
    }
    Ok(selected)
}

/// One draw `μ + L η` of the latent field on `segments`, with `η` from a
/// ChaCha20 stream keyed by `seed`.
pub fn sample_gp(kernel: &EmbeddedKernel, segments: &[usize], seed: u64) -> Result<DVector<f64>> {
    check_domain(kernel, segments)?;
    let factor = Factor::new(
        &kernel.covariance(segments, segments),
        kernel.signal_variance(),
    )?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let eta = DVector::from_iterator(
        segments.len(),
        (0..segments.len()).map(|_| StandardNormal.sample(&mut rng)),
    );
    Ok(kernel.mean_of(segments) + factor.lower() * eta)
}
