//! Synchronous-round simulation of a sensor team over a synthetic field,
//! with baselines and a metrics table.

mod config;
mod experiment;
mod metrics;
mod setup;
mod world;

pub use config::{Algorithm, Config, LengthScales, OneOrMany, PriorMean, SupportRule};
pub use experiment::{grid_cells, run_cell, run_experiment, Cell};
pub use metrics::{
    final_rows, ledger_account, rmse, summarize, write_metrics, write_summary, MessageLedger,
    MetricsRow, RoundMessages, SummaryRow, METRICS_HEADER,
};
pub use setup::{derive_seed, ExperimentSetup};
pub use world::{init_world, RoundPlan, SensorState, WorldState};
