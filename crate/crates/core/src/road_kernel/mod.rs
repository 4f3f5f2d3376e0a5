//! Road-network graph, geodesic distances, Euclidean embedding and the
//! squared-exponential kernel defined on it.

mod geodesic;
mod hyper;
mod kernel;
mod mds;
mod network;

pub use geodesic::{geodesic_distances, GeodesicMatrix};
pub use hyper::{fit_hyperparameters, log_marginal_likelihood, FitConfig, FitResult};
pub use kernel::{EmbeddedKernel, KernelHyperparams};
pub use mds::{
    mds_embed, mds_embed_with, select_dimension, stress, ClassicalSpectrum, Embedding, MdsOptions,
    DEFAULT_RETAINED_MASS,
};
pub use network::{NetworkDocument, RoadNetwork, Segment, NETWORK_SCHEMA_VERSION};
