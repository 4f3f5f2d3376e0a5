//! Decentralized data fusion: each sensor compresses its observations into a
//! local summary on a shared support set, the summaries are summed into a
//! global summary, and every sensor predicts from the global summary alone.
//!
//! [`pitc_posterior`] is the centralized sparse approximation the fused
//! prediction must reproduce exactly.

mod pitc;
mod summary;
mod wire;

pub use pitc::{pitc_lambda, pitc_posterior};
pub use summary::{
    fused_posterior, global_summary, local_summary, summary_message_size, FusedPredictor,
    FusionContext, GlobalSummary, LocalSummary, MessageSize, SummarySum, SupportSet,
};
pub use wire::{decode_summary, encode_summary, SUMMARY_HEADER_WORDS, SUMMARY_SCHEMA_VERSION};
