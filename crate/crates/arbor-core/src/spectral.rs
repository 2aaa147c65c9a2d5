//! Eigenstructure of the symmetric kernel compressions: sorted spectral
//! decompositions, partial inverses on the numerical range, and positivity
//! scans over the spectral parameter.
//!
//! Level-k cylinders all carry the same mass, so positivity of the kernel
//! form on level-k functions is exactly matrix positive-semidefiniteness of
//! the Gram compression; no measure-weight conjugation is needed.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::context::GroupContext;
use crate::error::{ArborError, Result};
use crate::kernel::{gram_matrix, GramMatrix};
use crate::measure::{level_measure, rat_to_f64};

/// Eigenvalues below this fraction of the largest magnitude are treated as
/// numerical kernel when inverting.
pub const KERNEL_THRESHOLD_SCALE: f64 = 1e-12;

/// A full symmetric eigendecomposition, eigenpairs sorted by descending
/// eigenvalue magnitude.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl SpectralDecomp {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as matrix columns, aligned with
    /// `eigenvalues()`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest eigenvalue magnitude: the spectral norm of the input.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.first().map(|v| v.abs()).unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.eigenvalues.clone()));
        &self.vectors * d * self.vectors.transpose()
    }

    /// Largest absolute entry of `V^T V - I`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        let gram = self.vectors.transpose() * &self.vectors;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Decomposes a symmetric matrix, rejecting visibly asymmetric input.
pub fn spectral_decomp(m: &DMatrix<f64>) -> Result<SpectralDecomp> {
    if !m.is_square() {
        return Err(ArborError::pre("spectral decomposition needs a square matrix"));
    }
    let scale = max_abs(m).max(1.0);
    let defect = max_abs(&(m - m.transpose()));
    if defect > 1e-12 * scale {
        return Err(ArborError::pre(format!(
            "matrix is not symmetric: asymmetry {defect:.3e} at scale {scale:.3e}"
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .abs()
            .partial_cmp(&eig.eigenvalues[i].abs())
            .unwrap()
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok(SpectralDecomp { eigenvalues, vectors })
}

/// A partial inverse defined on the span of the above-threshold eigenpairs.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub decomp: SpectralDecomp,
    pub matrix: DMatrix<f64>,
    pub threshold: f64,
    pub rank: usize,
}

impl PseudoInverse {
    /// Orthogonal projector onto the numerical range.
    pub fn range_projector(&self) -> DMatrix<f64> {
        let n = self.decomp.dim();
        let mut p = DMatrix::zeros(n, n);
        for i in 0..self.rank {
            let v = self.decomp.vectors.column(i);
            p += &v * v.transpose();
        }
        p
    }
}

/// Inverts a symmetric matrix on its numerical range: eigenvalues with
/// magnitude below `KERNEL_THRESHOLD_SCALE` times the spectral norm are
/// treated as kernel directions and annihilated.
pub fn spectral_pseudo_inverse(m: &DMatrix<f64>) -> Result<PseudoInverse> {
    let decomp = spectral_decomp(m)?;
    let n = decomp.dim();
    let threshold = KERNEL_THRESHOLD_SCALE * decomp.spectral_norm();
    let mut inverse = DMatrix::zeros(n, n);
    let mut rank = 0;
    for i in 0..n {
        let lambda = decomp.eigenvalues[i];
        if lambda.abs() > threshold {
            let v = decomp.vectors.column(i);
            inverse += &v * v.transpose() / lambda;
            rank += 1;
        }
    }
    Ok(PseudoInverse { decomp, matrix: inverse, threshold, rank })
}

/// One grid point of a positivity scan.
#[derive(Debug, Clone, Serialize)]
pub struct PositivityRow {
    pub t: f64,
    pub level: usize,
    pub dim: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl PositivityRow {
    /// Smallest eigenvalue in units of the largest: the dimensionless
    /// witness for a genuinely negative direction.
    pub fn normalized_min(&self) -> f64 {
        self.min_eigenvalue / self.max_eigenvalue.abs().max(f64::MIN_POSITIVE)
    }
}

/// Minimum and maximum Gram eigenvalues over a parameter grid, levels 1..=k.
pub fn positivity_scan(
    ctx: &GroupContext,
    t_grid: &[f64],
    k_max: usize,
) -> Result<Vec<PositivityRow>> {
    let mut rows = Vec::with_capacity(t_grid.len() * k_max);
    for &t in t_grid {
        for k in 1..=k_max {
            let g = gram_matrix(ctx, t, k)?;
            let decomp = spectral_decomp(&g.as_matrix())?;
            rows.push(PositivityRow {
                t,
                level: k,
                dim: g.dim(),
                min_eigenvalue: decomp.min_eigenvalue(),
                max_eigenvalue: decomp.max_eigenvalue(),
            });
        }
    }
    Ok(rows)
}

/// Operator norm of a Gram compression acting on level-k functions: the
/// spectral norm of the entry matrix divided by the cylinder mass (all
/// level-k cylinders weigh the same, so the weighted and unweighted norms
/// coincide).
pub fn compression_norm(ctx: &GroupContext, g: &GramMatrix) -> Result<f64> {
    let decomp = spectral_decomp(&g.as_matrix())?;
    let nu = rat_to_f64(&level_measure(ctx, g.level()));
    Ok(decomp.spectral_norm() / nu)
}
