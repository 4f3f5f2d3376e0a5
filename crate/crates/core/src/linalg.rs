//! Dense helpers shared by every module: Cholesky with a jitter ladder,
//! triangular solves and Gaussian entropies.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Smallest jitter tried, relative to the signal variance.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried, relative to the signal variance.
pub const JITTER_MAX: f64 = 1e-4;

/// A Cholesky factor together with the diagonal jitter that was needed to obtain it.
#[derive(Clone, Debug)]
pub struct Factor {
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl Factor {
    /// Factor `m`, escalating the diagonal jitter from `1e-10 * scale` by
    /// powers of ten up to `1e-4 * scale` when the plain factorization fails.
    pub fn new(m: &DMatrix<f64>, scale: f64) -> Result<Self> {
        let n = m.nrows();
        if let Some(chol) = Cholesky::new(m.clone()) {
            return Ok(Factor { chol, jitter: 0.0 });
        }
        let scale = if scale.is_finite() && scale > 0.0 {
            scale
        } else {
            1.0
        };
        let mut rel = JITTER_START;
        while rel <= JITTER_MAX * (1.0 + 1e-9) {
            let jitter = rel * scale;
            let mut shifted = m.clone();
            for i in 0..n {
                shifted[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(shifted) {
                return Ok(Factor { chol, jitter });
            }
            rel *= 10.0;
        }
        Err(Error::NotPositiveDefinite {
            order: n,
            jitter: JITTER_MAX * scale,
        })
    }

    pub fn order(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// The lower-triangular factor `L` with `L Lᵀ = m (+ jitter I)`.
    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `L⁻¹ b`.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        if b.ncols() == 0 || self.order() == 0 {
            return DMatrix::zeros(self.order(), b.ncols());
        }
        self.chol
            .l_dirty()
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    pub fn solve_lower_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        if self.order() == 0 {
            return DVector::zeros(0);
        }
        self.chol
            .l_dirty()
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `m⁻¹ b`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        if b.ncols() == 0 || self.order() == 0 {
            return DMatrix::zeros(self.order(), b.ncols());
        }
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        if self.order() == 0 {
            return DVector::zeros(0);
        }
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        if self.order() == 0 {
            return DMatrix::zeros(0, 0);
        }
        symmetrized(&self.chol.inverse())
    }

    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
    }
}

/// `½ log((2πe)^n |cov|)`; the empty set has entropy zero.
pub fn gaussian_entropy(cov: &DMatrix<f64>, scale: f64) -> Result<f64> {
    let n = cov.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let factor = Factor::new(cov, scale)?;
    Ok(0.5
        * (n as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + factor.log_det()))
}

/// `(m + mᵀ) / 2`.
pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Largest absolute entrywise difference, divided by the largest absolute entry of `reference` (or 1).
pub fn relative_error(actual: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    assert_eq!(actual.shape(), reference.shape());
    let scale = reference
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let diff = actual
        .iter()
        .zip(reference.iter())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    diff / scale
}
