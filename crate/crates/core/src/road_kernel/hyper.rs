//! Maximum-likelihood hyperparameters for the embedded squared-exponential kernel.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::KernelHyperparams;
use super::mds::Embedding;
use crate::error::{Error, Result};
use crate::linalg::Factor;

/// Search box and effort for [`fit_hyperparameters`]. Bounds are in natural
/// units; the search itself runs over their logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub signal_variance_bounds: (f64, f64),
    pub length_scale_bounds: (f64, f64),
    /// `None` keeps the noise variance at `fixed_noise_variance`.
    pub noise_variance_bounds: Option<(f64, f64)>,
    pub fixed_noise_variance: f64,
    pub restarts: usize,
    pub sweeps: usize,
    /// Golden-section interval width at which a line search stops (log units).
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            signal_variance_bounds: (1e-3, 1e3),
            length_scale_bounds: (1e-2, 1e2),
            noise_variance_bounds: Some((1e-6, 1e1)),
            fixed_noise_variance: 0.0,
            restarts: 3,
            sweeps: 8,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

impl FitConfig {
    /// Centre the signal/noise bounds on the sample variance of `values` and
    /// the length-scale bounds on the spread of the embedding.
    pub fn scaled_to(mut self, values: &[f64], embedding: &Embedding) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).max(1e-12);
        self.signal_variance_bounds = (var * 1e-2, var * 1e2);
        if self.noise_variance_bounds.is_some() {
            self.noise_variance_bounds = Some((var * 1e-6, var * 10.0));
        }
        let spread = (0..embedding.dim())
            .map(|k| {
                let col = embedding.coords().column(k);
                col.max() - col.min()
            })
            .fold(0.0_f64, f64::max)
            .max(1e-6);
        self.length_scale_bounds = (spread * 1e-3, spread * 10.0);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub hyper: KernelHyperparams,
    /// Constant prior mean used during the fit (empirical mean of the data).
    pub mean: f64,
    pub log_likelihood: f64,
}

/// Gaussian log marginal likelihood `log N(z_D; μ 1, K_DD + σ_n² I)`.
pub fn log_marginal_likelihood(
    embedding: &Embedding,
    hyper: &KernelHyperparams,
    indices: &[usize],
    values: &[f64],
    mean: f64,
) -> Result<f64> {
    hyper.validate()?;
    if hyper.length_scales.len() != embedding.dim() {
        return Err(Error::InvalidHyperparameters(format!(
            "{} length-scales for a {}-dimensional embedding",
            hyper.length_scales.len(),
            embedding.dim()
        )));
    }
    if indices.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: indices.len(),
            right: values.len(),
        });
    }
    if let Some(&bad) = indices.iter().find(|&&s| s >= embedding.len()) {
        return Err(Error::InvalidObservations(format!(
            "segment {bad} is outside the domain"
        )));
    }
    let n = indices.len();
    let cov = covariance_on(embedding, hyper, indices);
    let factor = Factor::new(&cov, hyper.signal_variance)?;
    let resid = DVector::from_iterator(n, values.iter().map(|v| v - mean));
    let white = factor.solve_lower_vec(&resid);
    Ok(-0.5 * white.norm_squared()
        - 0.5 * factor.log_det()
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
}

fn covariance_on(
    embedding: &Embedding,
    hyper: &KernelHyperparams,
    indices: &[usize],
) -> DMatrix<f64> {
    let n = indices.len();
    let dim = embedding.dim();
    let coords = embedding.coords();
    let scaled: Vec<f64> = indices
        .iter()
        .flat_map(|&s| (0..dim).map(move |k| (s, k)))
        .map(|(s, k)| coords[(s, k)] / hyper.length_scales[k])
        .collect();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let sq: f64 = (0..dim)
                .map(|k| (scaled[i * dim + k] - scaled[j * dim + k]).powi(2))
                .sum();
            let v = hyper.signal_variance * (-0.5 * sq).exp();
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
        cov[(i, i)] += hyper.noise_variance;
    }
    cov
}

/// Maximize the log marginal likelihood by multi-restart coordinate-wise
/// golden-section search in log space. Candidates whose covariance cannot
/// be factorized even with jitter score `-∞` and are skipped.
pub fn fit_hyperparameters(
    embedding: &Embedding,
    indices: &[usize],
    values: &[f64],
    config: &FitConfig,
) -> Result<FitResult> {
    if indices.len() < 2 {
        return Err(Error::InvalidObservations(
            "hyperparameter fitting needs at least two observations".into(),
        ));
    }
    if indices.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: indices.len(),
            right: values.len(),
        });
    }
    let dim = embedding.dim();
    let mean = values.iter().sum::<f64>() / values.len() as f64;

    let mut bounds = vec![log_bounds(config.signal_variance_bounds)?];
    bounds.extend(std::iter::repeat_n(
        log_bounds(config.length_scale_bounds)?,
        dim,
    ));
    if let Some(nb) = config.noise_variance_bounds {
        bounds.push(log_bounds(nb)?);
    }

    let decode = |theta: &[f64]| KernelHyperparams {
        signal_variance: theta[0].exp(),
        length_scales: theta[1..=dim].iter().map(|t| t.exp()).collect(),
        noise_variance: if config.noise_variance_bounds.is_some() {
            theta[dim + 1].exp()
        } else {
            config.fixed_noise_variance
        },
    };
    let objective = |theta: &[f64]| {
        log_marginal_likelihood(embedding, &decode(theta), indices, values, mean)
            .unwrap_or(f64::NEG_INFINITY)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for restart in 0..config.restarts.max(1) {
        let mut theta: Vec<f64> = if restart == 0 {
            bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
        } else {
            bounds
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect()
        };
        let mut value = objective(&theta);
        for _ in 0..config.sweeps.max(1) {
            let before = value;
            for i in 0..theta.len() {
                let (lo, hi) = bounds[i];
                let (arg, v) = golden_section(lo, hi, config.tolerance, |t| {
                    let mut probe = theta.clone();
                    probe[i] = t;
                    objective(&probe)
                });
                if v > value {
                    theta[i] = arg;
                    value = v;
                }
            }
            if value - before <= 1e-10 * (1.0 + value.abs()) {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((theta, value));
        }
    }
    let (theta, log_likelihood) = best.expect("at least one restart");
    if !log_likelihood.is_finite() {
        return Err(Error::NotPositiveDefinite {
            order: indices.len(),
            jitter: crate::linalg::JITTER_MAX,
        });
    }
    Ok(FitResult {
        hyper: decode(&theta),
        mean,
        log_likelihood,
    })
}

fn log_bounds((lo, hi): (f64, f64)) -> Result<(f64, f64)> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Config(format!("invalid search bounds ({lo}, {hi})")));
    }
    Ok((lo.ln(), hi.ln()))
}

/// Maximize `f` on `[lo, hi]`; returns the best point seen and its value.
fn golden_section(lo: f64, hi: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best
}
