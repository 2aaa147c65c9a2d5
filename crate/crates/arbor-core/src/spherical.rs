//! Radial harmonic analysis: the spherical function, its two-sided
//! envelope, and the positive-definiteness Gram over balls.

use rayon::prelude::*;
use serde::Serialize;

use crate::coeff::{matrix_coefficient, radial_factor, stratum_mass_table};
use crate::context::GroupContext;
use crate::cylfn::CylinderFunction;
use crate::error::{ArborError, Result};
use crate::kernel::riesz_boundary_avg;
use crate::spectral::spectral_decomp;
use crate::sum::Neumaier;
use crate::word::{enumerate_sphere, ReducedWord};

/// The spherical function: the diagonal coefficient of the constant vector,
/// as an explicit stratum sum. Radial, so it takes the word length.
///
/// Shares the stratum masses, the power routine, and the summation order
/// with the grouped coefficient, so it reproduces
/// `matrix_coefficient(t, gamma, 1, 1)` bit for bit.
pub fn phi(ctx: &GroupContext, t: f64, n: usize) -> f64 {
    let strata = stratum_mass_table(ctx, n);
    let mut acc = Neumaier::new();
    for (m, mass) in strata.iter().enumerate() {
        acc.add(mass * radial_factor(ctx, t, m, n));
    }
    acc.value()
}

/// The comparison profile in the spherical envelope:
/// `2 sinh(t Q x) / (e^{2tQ} - 1)`, extended by its limit `x` at t = 0.
pub fn omega(ctx: &GroupContext, t: f64, x: f64) -> f64 {
    if t == 0.0 {
        return x;
    }
    let q = ctx.growth();
    2.0 * (t * q * x).sinh() / ((2.0 * t * q).exp() - 1.0)
}

/// The spherical envelope `e^{-Qn/2} (1 + omega_{|t|}(n))`.
pub fn spherical_envelope(ctx: &GroupContext, t: f64, n: usize) -> f64 {
    let x = n as f64;
    (-ctx.growth() * x / 2.0).exp() * (1.0 + omega(ctx, t.abs(), x))
}

/// Extreme ratios of the spherical function against its envelope over
/// `0 <= n <= n_max`.
pub fn hca_check(ctx: &GroupContext, t: f64, n_max: usize) -> Result<(f64, f64)> {
    if n_max < 1 {
        return Err(ArborError::pre("envelope check needs n_max >= 1"));
    }
    let mut c_min = f64::INFINITY;
    let mut c_max = 0.0f64;
    for n in 0..=n_max {
        let ratio = phi(ctx, t, n) / spherical_envelope(ctx, t, n);
        c_min = c_min.min(ratio);
        c_max = c_max.max(ratio);
    }
    Ok((c_min, c_max))
}

/// One row of a spherical-function table.
#[derive(Debug, Clone, Serialize)]
pub struct SphericalRow {
    pub n: usize,
    pub phi: f64,
    pub envelope_low: f64,
    pub envelope_high: f64,
    pub ratio: f64,
}

/// The spherical function tabulated against its envelope band.
#[derive(Debug, Clone, Serialize)]
pub struct SphericalTable {
    pub t: f64,
    pub rows: Vec<SphericalRow>,
}

impl SphericalTable {
    pub fn compute(ctx: &GroupContext, t: f64, n_max: usize) -> Self {
        let rows: Vec<SphericalRow> = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let value = phi(ctx, t, n);
                let env = spherical_envelope(ctx, t, n);
                SphericalRow {
                    n,
                    phi: value,
                    envelope_low: env / 2.0,
                    envelope_high: env * 2.0,
                    ratio: value / env,
                }
            })
            .collect();
        SphericalTable { t, rows }
    }

    /// CSV with the frozen column order.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "phi", "envelope_low", "envelope_high", "ratio"])
            .map_err(csv_err)?;
        for row in &self.rows {
            w.write_record([
                row.n.to_string(),
                row.phi.to_string(),
                row.envelope_low.to_string(),
                row.envelope_high.to_string(),
                row.ratio.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> ArborError {
    ArborError::Precondition(format!("csv write failed: {e}"))
}

/// The spherical function recomputed through the smoothing operator: the
/// coefficient of the constant against the normalized kernel average of the
/// constant, materialized at level 1. An independent route that must agree
/// with `phi` on the nose, because that average is again the constant.
pub fn spherical_varphi(ctx: &GroupContext, t: f64, gamma: &ReducedWord) -> Result<f64> {
    let smoothed = riesz_boundary_avg(ctx, t, &CylinderFunction::one(), 1)?;
    let one = CylinderFunction::one();
    Ok(matrix_coefficient(ctx, t, gamma, &one, &smoothed)?.re)
}

/// Words of the closed ball of the given radius, identity first, then
/// spheres in enumeration order.
pub(crate) fn ball_words(ctx: &GroupContext, radius: usize) -> Result<Vec<ReducedWord>> {
    let mut words = vec![ReducedWord::empty()];
    for n in 1..=radius {
        words.extend(enumerate_sphere(ctx, n, None)?);
    }
    Ok(words)
}

/// Minimum eigenvalue of the Gram matrix `[phi_t(h^{-1} g)]` over the
/// closed ball of the given radius: the finite-rank witness for whether
/// the spherical function is of positive type.
pub fn pd_gram_phi(ctx: &GroupContext, t: f64, radius: usize) -> Result<f64> {
    let words = ball_words(ctx, radius)?;
    let dim = words.len();
    let phis: Vec<f64> = (0..=2 * radius).map(|n| phi(ctx, t, n)).collect();
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let g = &words[i];
            let h = &words[j];
            // |h^{-1} g| from the Gromov product at the identity
            let len = g.len() + h.len() - 2 * g.common_prefix_len(h);
            m[(i, j)] = phis[len];
        }
    }
    Ok(spectral_decomp(&m)?.min_eigenvalue())
}
