use nalgebra::DMatrix;
use rayon::prelude::*;

use super::walks::WalkSet;
use crate::error::Result;
use crate::fusion::FusedPredictor;

/// `Φ_k`: column `i` is `Ψ \ Σ_{U s_i}` for candidate segment `s_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Phi {
    pub sensor: usize,
    pub segments: Vec<usize>,
    pub vectors: DMatrix<f64>,
}

impl Phi {
    pub fn payload_scalars(&self) -> usize {
        self.vectors.len()
    }
}

pub fn compute_phi(
    predictor: &FusedPredictor<'_>,
    sensor: usize,
    candidates: &[usize],
) -> Result<Phi> {
    Ok(Phi {
        sensor,
        segments: candidates.to_vec(),
        vectors: predictor.phi(candidates)?,
    })
}

/// `max |φᵀφ'|` over columns of `a` and `b`; zero when either is empty.
/// The dot products are summed in a fixed order so the result is symmetric
/// in its arguments bit for bit.
pub fn max_abs_cross(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let rows = a.nrows();
    let mut best = 0.0_f64;
    for i in 0..a.ncols() {
        let x = a.column(i);
        for j in 0..b.ncols() {
            let y = b.column(j);
            let mut dot = 0.0;
            for r in 0..rows {
                dot += x[r] * y[r];
            }
            best = best.max(dot.abs());
        }
    }
    best
}

/// `[a_k]_{k'} = 1` iff `max |φᵀφ'| > ε` over `Φ_k × Φ_{k'}`; `[a_k]_k = 1`.
pub fn adjacency_vector(k: usize, phis: &[Phi], epsilon: f64) -> Vec<bool> {
    phis.iter()
        .enumerate()
        .map(|(other, phi)| other == k || max_abs_cross(&phis[k].vectors, &phi.vectors) > epsilon)
        .collect()
}

/// Vertex sets of the connected components, each ascending, ordered by their
/// smallest member; `kappa` is the size of the largest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    pub groups: Vec<Vec<usize>>,
    pub kappa: usize,
}

impl Components {
    pub fn count(&self) -> usize {
        self.groups.len()
    }

    pub fn of(&self, vertex: usize) -> &[usize] {
        self.groups
            .iter()
            .find(|g| g.contains(&vertex))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Depth-first search from each not-yet-visited vertex in ascending order.
pub fn connected_components(adjacency: &[Vec<bool>]) -> Components {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut groups = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![root];
        let mut group = Vec::new();
        while let Some(v) = stack.pop() {
            group.push(v);
            for (w, &linked) in adjacency[v].iter().enumerate() {
                if linked && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        group.sort_unstable();
        groups.push(group);
    }
    let kappa = groups.iter().map(Vec::len).max().unwrap_or(0);
    Components { groups, kappa }
}

/// Everything the sensors agree on before planning: `Ψ`, every `Φ_k`, the
/// adjacency matrix of the coordination graph and its components.
#[derive(Clone, Debug)]
pub struct CoordinationState {
    pub psi: DMatrix<f64>,
    pub phis: Vec<Phi>,
    pub adjacency: Vec<Vec<bool>>,
    pub components: Components,
    pub epsilon: f64,
}

impl CoordinationState {
    /// `walk_sets[k]` must belong to sensor `k`.
    pub fn build(
        predictor: &FusedPredictor<'_>,
        walk_sets: &[WalkSet],
        epsilon: f64,
    ) -> Result<Self> {
        let phis = walk_sets
            .par_iter()
            .map(|ws| compute_phi(predictor, ws.sensor, &ws.candidates))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoordinationState::from_phis(predictor.psi(), phis, epsilon))
    }

    pub fn from_phis(psi: DMatrix<f64>, phis: Vec<Phi>, epsilon: f64) -> Self {
        let adjacency: Vec<Vec<bool>> = (0..phis.len())
            .into_par_iter()
            .map(|k| adjacency_vector(k, &phis, epsilon))
            .collect();
        let components = connected_components(&adjacency);
        CoordinationState {
            psi,
            phis,
            adjacency,
            components,
            epsilon,
        }
    }

    pub fn kappa(&self) -> usize {
        self.components.kappa
    }
}
