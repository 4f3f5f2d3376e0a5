//! Metric multidimensional scaling of a dissimilarity matrix.
//!
//! Classical (Torgerson) scaling gives the starting configuration; an
//! optional number of Guttman-transform sweeps then lowers the raw stress
//! `Σ_{s,s'} (d(s,s') − ‖g(s) − g(s')‖)²` further.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Segment coordinates in the embedding space.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    coords: DMatrix<f64>,
    stress: f64,
}

impl Embedding {
    /// Wrap raw coordinates (one row per segment). Columns are re-centered
    /// and stress is left at zero since no dissimilarities are known.
    pub fn from_coords(mut coords: DMatrix<f64>) -> Result<Self> {
        if coords.ncols() == 0 {
            return Err(Error::DimensionOutOfRange {
                dim: 0,
                max: coords.nrows(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDistances("non-finite coordinate".into()));
        }
        center_columns(&mut coords);
        Ok(Embedding {
            coords,
            stress: 0.0,
        })
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn stress(&self) -> f64 {
        self.stress
    }

    /// Euclidean distance between two embedded segments.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        (0..self.dim())
            .map(|k| (self.coords[(a, k)] - self.coords[(b, k)]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MdsOptions {
    /// Stress-majorization sweeps applied after classical scaling.
    pub refine_sweeps: usize,
}

/// Eigen-decomposition of the double-centred squared distances, sorted by
/// descending eigenvalue.
#[derive(Clone, Debug)]
pub struct ClassicalSpectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl ClassicalSpectrum {
    pub fn new(d: &DMatrix<f64>) -> Result<Self> {
        validate_distances(d)?;
        let n = d.nrows();
        let sq = d.map(|v| v * v);
        let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
        let grand = row_means.iter().sum::<f64>() / n as f64;
        let b = DMatrix::from_fn(n, n, |i, j| {
            -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
        });
        let eig = SymmetricEigen::new(b);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).clone_owned();
            // deterministic sign: largest-magnitude component positive
            let pivot = col.iamax();
            if col[pivot] < 0.0 {
                col.neg_mut();
            }
            vectors.set_column(dst, &col);
        }
        Ok(ClassicalSpectrum { values, vectors })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Share of the positive eigenvalue mass kept by the top `dim` eigenpairs.
    pub fn retained_mass(&self, dim: usize) -> f64 {
        let total: f64 = self.values.iter().filter(|v| **v > 0.0).sum();
        if total <= 0.0 {
            return 1.0;
        }
        let kept: f64 = self.values.iter().take(dim).filter(|v| **v > 0.0).sum();
        kept / total
    }

    /// Smallest dimension whose retained mass reaches `mass`, capped at `n − 1`.
    pub fn select_dimension(&self, mass: f64) -> usize {
        let max = self.values.len().saturating_sub(1).max(1);
        (1..=max)
            .find(|&q| self.retained_mass(q) >= mass)
            .unwrap_or(max)
    }

    /// Classical coordinates in `dim` dimensions.
    pub fn coordinates(&self, dim: usize) -> DMatrix<f64> {
        let n = self.vectors.nrows();
        let mut coords = DMatrix::zeros(n, dim);
        for k in 0..dim.min(self.values.len()) {
            let scale = self.values[k].max(0.0).sqrt();
            for i in 0..n {
                coords[(i, k)] = self.vectors[(i, k)] * scale;
            }
        }
        coords
    }
}

/// Default dimension choice: smallest `p'` keeping 95% of the positive spectrum.
pub const DEFAULT_RETAINED_MASS: f64 = 0.95;

pub fn select_dimension(d: &DMatrix<f64>, mass: f64) -> Result<usize> {
    Ok(ClassicalSpectrum::new(d)?.select_dimension(mass))
}

/// Embed with classical scaling only.
pub fn mds_embed(d: &DMatrix<f64>, dim: usize) -> Result<Embedding> {
    mds_embed_with(d, dim, &MdsOptions::default())
}

/// Embed `d` in `dim` dimensions.
///
/// For every `q ≤ dim` the better of the (refined) classical solution in
/// `q` dimensions and the best `q − 1` solution padded with a zero column is
/// kept, so the reported stress never increases with `dim`.
pub fn mds_embed_with(d: &DMatrix<f64>, dim: usize, options: &MdsOptions) -> Result<Embedding> {
    let n = d.nrows();
    let max = n.saturating_sub(1);
    if dim < 1 || dim > max {
        validate_distances(d)?;
        return Err(Error::DimensionOutOfRange { dim, max });
    }
    let spectrum = ClassicalSpectrum::new(d)?;
    if options.refine_sweeps == 0 {
        return Ok(classical_nested(d, &spectrum, dim));
    }

    let mut best: Option<(DMatrix<f64>, f64)> = None;
    for q in 1..=dim {
        let mut candidate = spectrum.coordinates(q);
        let mut candidate_stress = stress(d, &candidate);
        for _ in 0..options.refine_sweeps {
            let next = guttman_transform(d, &candidate);
            let next_stress = stress(d, &next);
            if next_stress < candidate_stress {
                candidate = next;
                candidate_stress = next_stress;
            } else {
                break;
            }
        }
        best = Some(match best {
            Some((prev, prev_stress)) if prev_stress < candidate_stress => {
                (prev.insert_column(q - 1, 0.0), prev_stress)
            }
            _ => (candidate, candidate_stress),
        });
    }
    let (mut coords, _) = best.expect("dim >= 1");
    center_columns(&mut coords);
    let stress = stress(d, &coords);
    Ok(Embedding { coords, stress })
}

/// Unrefined classical solutions are nested, so the stress of every prefix
/// dimension comes from one running sum of squared coordinate differences.
fn classical_nested(d: &DMatrix<f64>, spectrum: &ClassicalSpectrum, dim: usize) -> Embedding {
    let n = d.nrows();
    let full = spectrum.coordinates(dim);
    let mut sq = vec![0.0; n * n];
    let (mut best_q, mut best_stress) = (0, f64::INFINITY);
    for q in 0..dim {
        let col = full.column(q);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let diff = col[i] - col[j];
                    let cell = &mut sq[i * n + j];
                    *cell += diff * diff;
                    total += (d[(i, j)] - cell.sqrt()).powi(2);
                }
            }
        }
        // padding the best lower-dimensional solution keeps its stress
        if total <= best_stress {
            best_q = q + 1;
            best_stress = total;
        }
    }
    let mut coords = full;
    for q in best_q..dim {
        coords.column_mut(q).fill(0.0);
    }
    center_columns(&mut coords);
    let stress = stress(d, &coords);
    Embedding { coords, stress }
}

/// Raw stress over ordered pairs: `Σ_{s,s'} (d(s,s') − ‖g(s) − g(s')‖)²`.
pub fn stress(d: &DMatrix<f64>, coords: &DMatrix<f64>) -> f64 {
    let n = d.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let e = euclidean(coords, i, j);
                total += (d[(i, j)] - e).powi(2);
            }
        }
    }
    total
}

fn euclidean(coords: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (0..coords.ncols())
        .map(|k| (coords[(i, k)] - coords[(j, k)]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// One stress-majorization step `X ← n⁻¹ B(X) X` (unit weights).
fn guttman_transform(d: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let e = euclidean(x, i, j);
            let bij = if e > 1e-12 { -d[(i, j)] / e } else { 0.0 };
            b[(i, j)] = bij;
            diag -= bij;
        }
        b[(i, i)] = diag;
    }
    (b * x) / n as f64
}

fn center_columns(coords: &mut DMatrix<f64>) {
    let n = coords.nrows();
    if n == 0 {
        return;
    }
    for k in 0..coords.ncols() {
        let mean = coords.column(k).sum() / n as f64;
        coords.column_mut(k).add_scalar_mut(-mean);
    }
}

fn validate_distances(d: &DMatrix<f64>) -> Result<()> {
    if !d.is_square() {
        return Err(Error::InvalidDistances(format!(
            "{}x{} is not square",
            d.nrows(),
            d.ncols()
        )));
    }
    if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidDistances(
            "entries must be finite and non-negative".into(),
        ));
    }
    let scale = d.iter().fold(1.0_f64, |m, v| m.max(*v));
    let n = d.nrows();
    for i in 0..n {
        if d[(i, i)] != 0.0 {
            return Err(Error::InvalidDistances(format!("non-zero diagonal at {i}")));
        }
        for j in (i + 1)..n {
            if (d[(i, j)] - d[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::InvalidDistances(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}
