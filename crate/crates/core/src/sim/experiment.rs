use rayon::prelude::*;

use super::config::Algorithm;
use super::metrics::MetricsRow;
use super::setup::ExperimentSetup;
use super::world::init_world;
use crate::error::Result;

/// One run of the experiment grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub algorithm: Algorithm,
    pub sensors: usize,
    pub walk_length: usize,
    pub seed: u64,
}

/// Algorithm × K × L × seed, in that nesting order.
pub fn grid_cells(setup: &ExperimentSetup) -> Vec<Cell> {
    let cfg = &setup.config;
    let mut cells = Vec::new();
    for &algorithm in &cfg.algorithms {
        for sensors in cfg.sensor_counts() {
            for walk_length in cfg.walk_lengths() {
                for &seed in &cfg.seeds {
                    cells.push(Cell {
                        algorithm,
                        sensors,
                        walk_length,
                        seed,
                    });
                }
            }
        }
    }
    cells
}

pub fn run_cell(setup: &ExperimentSetup, cell: Cell) -> Result<Vec<MetricsRow>> {
    init_world(
        setup,
        cell.algorithm,
        cell.sensors,
        cell.walk_length,
        cell.seed,
    )?
    .run()
}

/// Every cell of the grid, run concurrently; rows come back in grid order.
pub fn run_experiment(setup: &ExperimentSetup) -> Result<Vec<MetricsRow>> {
    let per_cell = grid_cells(setup)
        .into_par_iter()
        .map(|cell| run_cell(setup, cell))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}
