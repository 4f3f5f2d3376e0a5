use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::mds::Embedding;
use crate::error::{Error, Result};

/// Squared-exponential hyperparameters over embedded coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperparams {
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
    pub noise_variance: f64,
}

impl KernelHyperparams {
    pub fn new(signal_variance: f64, length_scales: Vec<f64>, noise_variance: f64) -> Result<Self> {
        let h = KernelHyperparams {
            signal_variance,
            length_scales,
            noise_variance,
        };
        h.validate()?;
        Ok(h)
    }

    /// Same length-scale on every one of `dim` axes.
    pub fn isotropic(
        signal_variance: f64,
        length_scale: f64,
        dim: usize,
        noise_variance: f64,
    ) -> Result<Self> {
        KernelHyperparams::new(signal_variance, vec![length_scale; dim], noise_variance)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.signal_variance) {
            return Err(Error::InvalidHyperparameters(format!(
                "signal variance {} must be positive",
                self.signal_variance
            )));
        }
        if self.length_scales.is_empty() || !self.length_scales.iter().all(|&l| positive(l)) {
            return Err(Error::InvalidHyperparameters(
                "length-scales must be a non-empty list of positive values".into(),
            ));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::InvalidHyperparameters(format!(
                "noise variance {} must be non-negative",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// Covariance over road segments: squared-exponential on the embedding plus
/// i.i.d. observation noise, with a per-segment prior mean.
#[derive(Clone, Debug)]
pub struct EmbeddedKernel {
    embedding: Arc<Embedding>,
    hyper: KernelHyperparams,
    prior_mean: Vec<f64>,
    /// coordinates divided by the length-scales, row-major
    scaled: Arc<Vec<f64>>,
}

impl EmbeddedKernel {
    pub fn new(
        embedding: Arc<Embedding>,
        hyper: KernelHyperparams,
        prior_mean: Vec<f64>,
    ) -> Result<Self> {
        hyper.validate()?;
        if hyper.length_scales.len() != embedding.dim() {
            return Err(Error::InvalidHyperparameters(format!(
                "{} length-scales for a {}-dimensional embedding",
                hyper.length_scales.len(),
                embedding.dim()
            )));
        }
        if prior_mean.len() != embedding.len() {
            return Err(Error::LengthMismatch {
                left: prior_mean.len(),
                right: embedding.len(),
            });
        }
        let dim = embedding.dim();
        let coords = embedding.coords();
        let mut scaled = Vec::with_capacity(embedding.len() * dim);
        for i in 0..embedding.len() {
            for k in 0..dim {
                scaled.push(coords[(i, k)] / hyper.length_scales[k]);
            }
        }
        Ok(EmbeddedKernel {
            embedding,
            hyper,
            prior_mean,
            scaled: Arc::new(scaled),
        })
    }

    pub fn with_constant_mean(
        embedding: Arc<Embedding>,
        hyper: KernelHyperparams,
        mean: f64,
    ) -> Result<Self> {
        let n = embedding.len();
        EmbeddedKernel::new(embedding, hyper, vec![mean; n])
    }

    /// Same kernel with a different constant prior mean.
    pub fn with_mean(&self, mean: f64) -> Self {
        EmbeddedKernel {
            prior_mean: vec![mean; self.len()],
            ..self.clone()
        }
    }

    /// Same embedding with new hyperparameters.
    pub fn with_hyper(&self, hyper: KernelHyperparams) -> Result<Self> {
        EmbeddedKernel::new(self.embedding.clone(), hyper, self.prior_mean.clone())
    }

    pub fn embedding(&self) -> &Arc<Embedding> {
        &self.embedding
    }

    pub fn hyper(&self) -> &KernelHyperparams {
        &self.hyper
    }

    pub fn signal_variance(&self) -> f64 {
        self.hyper.signal_variance
    }

    pub fn noise_variance(&self) -> f64 {
        self.hyper.noise_variance
    }

    pub fn prior_mean(&self) -> &[f64] {
        &self.prior_mean
    }

    /// Number of segments in the domain.
    pub fn len(&self) -> usize {
        self.embedding.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embedding.is_empty()
    }

    /// `k(s, s') = σ_s² exp(−½ Σ_i ((g(s)_i − g(s')_i) / ℓ_i)²)`.
    pub fn value(&self, a: usize, b: usize) -> f64 {
        let dim = self.embedding.dim();
        let xa = &self.scaled[a * dim..(a + 1) * dim];
        let xb = &self.scaled[b * dim..(b + 1) * dim];
        let sq: f64 = xa.iter().zip(xb).map(|(x, y)| (x - y) * (x - y)).sum();
        self.hyper.signal_variance * (-0.5 * sq).exp()
    }

    /// Noise-free cross-covariance `[k(a_i, b_j)]`.
    pub fn covariance(&self, a: &[usize], b: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(a.len(), b.len(), |i, j| self.value(a[i], b[j]))
    }

    /// `Σ_AA` with `σ_n²` on the diagonal (one noise term per listed observation).
    pub fn noisy_covariance(&self, a: &[usize]) -> DMatrix<f64> {
        let mut m = self.covariance(a, a);
        for i in 0..a.len() {
            m[(i, i)] += self.hyper.noise_variance;
        }
        m
    }

    /// Prior covariance between two index lists; noise is added on the
    /// diagonal only when requested and both lists are the same.
    pub fn prior_covariance(&self, a: &[usize], b: &[usize], include_noise: bool) -> DMatrix<f64> {
        if include_noise && a == b {
            self.noisy_covariance(a)
        } else {
            self.covariance(a, b)
        }
    }

    pub fn mean_of(&self, a: &[usize]) -> DVector<f64> {
        DVector::from_iterator(a.len(), a.iter().map(|&s| self.prior_mean[s]))
    }
}
