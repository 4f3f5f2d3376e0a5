use std::sync::Arc;

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{Config, LengthScales, OneOrMany, PriorMean, SupportRule};
use crate::error::{Error, Result};
use crate::fusion::SupportSet;
use crate::gp::{greedy_select, sample_gp};
use crate::road_kernel::{
    fit_hyperparameters, geodesic_distances, mds_embed_with, select_dimension, EmbeddedKernel,
    Embedding, FitConfig, KernelHyperparams, MdsOptions, RoadNetwork, DEFAULT_RETAINED_MASS,
};

pub(crate) const TAG_TRUTH: u64 = 1;
pub(crate) const TAG_PILOT: u64 = 2;
pub(crate) const TAG_FIT: u64 = 3;
pub(crate) const TAG_SUPPORT: u64 = 4;
pub(crate) const TAG_PLACEMENT: u64 = 5;
pub(crate) const TAG_NOISE: u64 = 6;

/// Mixes `parts` into one seed (SplitMix64 finalizer over a running state).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut state = 0x9e37_79b9_7f4a_7c15_u64;
    for &p in parts {
        state = state.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        state = z ^ (z >> 31);
    }
    state
}

/// Everything shared by the runs of one configuration: the network, its
/// embedding, the ground-truth field, the model kernel and the support set.
/// The kernel's mean is the configured constant or the fallback; runs with
/// an empirical mean re-centre it every round.
#[derive(Clone, Debug)]
pub struct ExperimentSetup {
    pub config: Config,
    pub base_seed: u64,
    pub network: RoadNetwork,
    pub embedding: Arc<Embedding>,
    pub truth: DVector<f64>,
    pub kernel: EmbeddedKernel,
    pub support: SupportSet,
}

fn broadcast(values: &OneOrMany<f64>, dim: usize) -> Result<Vec<f64>> {
    match values.to_vec() {
        v if v.len() == 1 => Ok(vec![v[0]; dim]),
        v if v.len() == dim => Ok(v),
        v => Err(Error::Config(format!(
            "{} length-scales given for a {dim}-dimensional embedding",
            v.len()
        ))),
    }
}

impl ExperimentSetup {
    pub fn load(config: Config, base_seed: u64) -> Result<Self> {
        let network = RoadNetwork::load(&config.network_path)?;
        ExperimentSetup::build(config, network, base_seed)
    }

    pub fn build(config: Config, network: RoadNetwork, base_seed: u64) -> Result<Self> {
        config.validate()?;
        let n = network.len();
        let distances = geodesic_distances(&network).imputed();
        let dim = match config.embedding_dim {
            Some(d) => d,
            None if n < 2 => 1,
            None => select_dimension(&distances, DEFAULT_RETAINED_MASS)?,
        };
        let embedding = Arc::new(mds_embed_with(
            &distances,
            dim,
            &MdsOptions {
                refine_sweeps: config.mds_sweeps,
            },
        )?);
        let dim = embedding.dim();
        let gt = config.ground_truth_seed;

        let truth_scales = match (&config.length_scales, &config.truth_length_scales) {
            (LengthScales::Values(v), _) => broadcast(v, dim)?,
            (_, Some(v)) => broadcast(v, dim)?,
            (_, None) => return Err(Error::Config("truth_length_scales is required".into())),
        };
        let truth_hyper =
            KernelHyperparams::new(config.signal_variance, truth_scales, config.sigma_n2)?;
        let truth_kernel = EmbeddedKernel::with_constant_mean(
            embedding.clone(),
            truth_hyper.clone(),
            config.truth_mean,
        )?;
        let all: Vec<usize> = (0..n).collect();
        let truth = sample_gp(
            &truth_kernel,
            &all,
            derive_seed(&[base_seed, gt, TAG_TRUTH]),
        )?;

        let hyper = if config.length_scales.is_fit() {
            let m = config.fit_sample.min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[base_seed, gt, TAG_PILOT]));
            let mut pilot: Vec<usize> = sample(&mut rng, n, m).into_vec();
            pilot.sort_unstable();
            let noise = Normal::new(0.0, config.sigma_n2.sqrt())
                .map_err(|e| Error::Config(e.to_string()))?;
            let values: Vec<f64> = pilot
                .iter()
                .map(|&s| truth[s] + noise.sample(&mut rng))
                .collect();
            let fit_config = FitConfig {
                noise_variance_bounds: None,
                fixed_noise_variance: config.sigma_n2,
                seed: derive_seed(&[base_seed, gt, TAG_FIT]),
                ..FitConfig::default()
            }
            .scaled_to(&values, &embedding);
            let fit = fit_hyperparameters(&embedding, &pilot, &values, &fit_config)?;
            fit.hyper
        } else {
            truth_hyper
        };
        let mean = match config.prior_mean {
            PriorMean::Value(v) => v,
            PriorMean::Keyword(_) => config.prior_mean_fallback,
        };
        let kernel = EmbeddedKernel::with_constant_mean(embedding.clone(), hyper, mean)?;

        if config.support_size > n {
            return Err(Error::Config(format!(
                "U_size {} exceeds the {n} segments of the network",
                config.support_size
            )));
        }
        let support = match config.support {
            SupportRule::Greedy => greedy_select(&kernel, &all, config.support_size)?,
            SupportRule::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[base_seed, gt, TAG_SUPPORT]));
                let mut u = sample(&mut rng, n, config.support_size).into_vec();
                u.sort_unstable();
                u
            }
        };
        Ok(ExperimentSetup {
            support: SupportSet::new(support)?,
            config,
            base_seed,
            network,
            embedding,
            truth,
            kernel,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_per_part() {
        let a = derive_seed(&[0, 1]);
        assert_ne!(a, derive_seed(&[1, 0]));
        assert_ne!(a, derive_seed(&[0, 1, 0]));
        assert_eq!(a, derive_seed(&[0, 1]));
    }
}
