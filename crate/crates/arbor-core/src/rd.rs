//! Norms of sphere-averaged representation operators, compressed to the
//! finite-dimensional spaces of level-k cylinder functions. The measured
//! compression norms are lower bounds for the full operator norms and are
//! compared against the spherical envelope.

use nalgebra::DMatrix;

use crate::coeff::CoeffPlan;
use crate::context::GroupContext;
use crate::cylfn::CylinderFunction;
use crate::error::{ArborError, Result};
use crate::kernel::{gram_matrix, riesz_boundary_avg, sigma};
use crate::measure::{level_measure, rat_to_f64};
use crate::spectral::{spectral_decomp, KERNEL_THRESHOLD_SCALE};
use crate::spherical::spherical_envelope;
use crate::sum::Neumaier;
use crate::word::{enumerate_sphere, Letter, ReducedWord, DEFAULT_ENUM_BUDGET};

/// Which inner product the compression norm is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// The boundary L2 inner product; defined for every t.
    L2,
    /// The kernel-form inner product behind `ht_inner`; needs 0 < t <= 1/2.
    Ht,
    /// The smoothed-range inner product behind `kt_inner`; needs 0 < t <= 1/2.
    Kt,
}

/// Walks of length `m` in the letter graph where a step may not go to the
/// inverse of its source. Closed form from the two eigenspaces of the
/// transfer matrix (constants, and the flip eigenspaces on their
/// complement).
fn nonbacktracking_walks(ctx: &GroupContext, m: usize, from: Letter, to: Letter) -> i128 {
    let q = ctx.alphabet_size() as i128;
    let b = (ctx.branching()) as i128;
    let mut pw: i128 = 1;
    for _ in 0..m {
        pw *= b;
    }
    if m % 2 == 0 {
        (pw - 1) / q + i128::from(to == from)
    } else {
        (pw + 1) / q - i128::from(to == ctx.involute(from))
    }
}

/// Number of length-`n` words with a given length-`k` prefix (indexed by
/// rank) and a given length-`k` inverse prefix. Requires `n >= 2k` so the
/// two windows do not overlap.
pub fn window_pair_counts(ctx: &GroupContext, n: usize, k: usize) -> Result<Vec<Vec<i128>>> {
    if k < 1 || n < 2 * k {
        return Err(ArborError::pre(format!(
            "window counts need 1 <= k and n >= 2k, got n={n} k={k}"
        )));
    }
    let heads: Vec<ReducedWord> = enumerate_sphere(ctx, k, None)?.collect();
    let steps = n - 2 * k + 1;
    let mut counts = vec![vec![0i128; heads.len()]; heads.len()];
    for (hi, h) in heads.iter().enumerate() {
        let last = *h.letters().last().unwrap();
        for (si, s) in heads.iter().enumerate() {
            // the suffix window of gamma is the reversed inverse of the
            // prefix window of gamma^{-1}; its first letter is the inverse
            // of the last letter of s
            let first_of_tail = ctx.involute(*s.letters().last().unwrap());
            counts[hi][si] = nonbacktracking_walks(ctx, steps, last, first_of_tail);
        }
    }
    Ok(counts)
}

/// A deterministic word of length `n` whose first `k` letters are `h` and
/// whose inverse starts with `s`. Caller guarantees such a word exists.
fn class_representative(
    ctx: &GroupContext,
    n: usize,
    h: &ReducedWord,
    s: &ReducedWord,
) -> Vec<Letter> {
    let k = h.len();
    let tail: Vec<Letter> = s.letters().iter().rev().map(|&l| ctx.involute(l)).collect();
    let mut letters = Vec::with_capacity(n);
    letters.extend_from_slice(h.letters());
    let fill = n - 2 * k;
    for i in 0..fill {
        let prev = *letters.last().unwrap();
        let mut choice = None;
        for cand in 0..ctx.alphabet_size() as Letter {
            if cand == ctx.involute(prev) {
                continue;
            }
            if i + 1 == fill && cand == ctx.involute(tail[0]) {
                continue;
            }
            choice = Some(cand);
            break;
        }
        letters.push(choice.expect("an extension letter always exists for rank >= 2"));
    }
    letters.extend_from_slice(&tail);
    letters
}

/// The compression of the uniform sphere average of the representation to
/// the level-k cylinder space, as the raw pairing matrix
/// `T[v][u] = |S_n|^{-1} sum_gamma <pi_t(gamma) 1_{C_u}, 1_{C_v}>`.
///
/// For n >= 2k the coefficient of a word against level-k indicators depends
/// only on its first and last k letters, so the sum collapses to the window
/// classes with exact multiplicities; shorter spheres are enumerated
/// directly. Entry order of accumulation is fixed, so results are
/// reproducible bit for bit.
pub fn sphere_average_compression(
    ctx: &GroupContext,
    t: f64,
    n: usize,
    level: usize,
) -> Result<DMatrix<f64>> {
    if level < 1 {
        return Err(ArborError::pre("compression needs level >= 1"));
    }
    let dim = ctx.sphere_size(level);
    if dim * dim > DEFAULT_ENUM_BUDGET || ctx.sphere_size(n) > DEFAULT_ENUM_BUDGET {
        return Err(ArborError::Budget {
            requested: (dim * dim).max(ctx.sphere_size(n)),
            budget: DEFAULT_ENUM_BUDGET,
        });
    }
    let dim = dim as usize;
    let indicators: Vec<CylinderFunction> = enumerate_sphere(ctx, level, None)?
        .map(|u| CylinderFunction::indicator(ctx, &u))
        .collect::<Result<_>>()?;
    if n == 0 {
        // the identity operator: diagonal of cylinder masses
        let nu = rat_to_f64(&level_measure(ctx, level));
        return Ok(DMatrix::from_fn(dim, dim, |v, u| if v == u { nu } else { 0.0 }));
    }
    let mut plans = Vec::with_capacity(dim * dim);
    for u in &indicators {
        for v in &indicators {
            plans.push(CoeffPlan::new(ctx, t, n, u, v)?);
        }
    }
    let eval_into = |letters: &[Letter], weight: f64, acc: &mut [Neumaier]| {
        for (p, a) in plans.iter().zip(acc.iter_mut()) {
            a.add(weight * p.eval(letters).re);
        }
    };
    let mut acc = vec![Neumaier::new(); dim * dim];
    if n >= 2 * level {
        let heads: Vec<ReducedWord> = enumerate_sphere(ctx, level, None)?.collect();
        let counts = window_pair_counts(ctx, n, level)?;
        for (hi, h) in heads.iter().enumerate() {
            for (si, s) in heads.iter().enumerate() {
                let weight = counts[hi][si];
                if weight == 0 {
                    continue;
                }
                let letters = class_representative(ctx, n, h, s);
                eval_into(&letters, weight as f64, &mut acc);
            }
        }
    } else {
        for gamma in enumerate_sphere(ctx, n, None)? {
            eval_into(gamma.letters(), 1.0, &mut acc);
        }
    }
    let total = ctx.sphere_size(n) as f64;
    // plans run in (u, v) row-major order; the matrix is indexed (v, u)
    Ok(DMatrix::from_fn(dim, dim, |v, u| acc[u * dim + v].value() / total))
}

/// The smoothing operator restricted to the level-k cylinder space, in the
/// indicator basis. Kernel averages of level-k functions are again level-k,
/// so the restriction is exact.
pub fn smoothing_matrix(ctx: &GroupContext, t: f64, level: usize) -> Result<DMatrix<f64>> {
    let dim = ctx.sphere_size(level) as usize;
    let s = sigma(ctx, t)?;
    let mut m = DMatrix::zeros(dim, dim);
    for (u, word) in enumerate_sphere(ctx, level, None)?.enumerate() {
        let e = CylinderFunction::indicator(ctx, &word)?;
        // riesz averages divide by the measured sigma; scale it back
        let avg = riesz_boundary_avg(ctx, t, &e, level)?;
        for (v, value) in avg.values().iter().enumerate() {
            m[(v, u)] = value.re * s;
        }
    }
    Ok(m)
}

/// Inverse square root of a positive semidefinite Gram, with directions
/// below the spectral threshold quotiented out.
fn whitener(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let decomp = spectral_decomp(g)?;
    let cut = KERNEL_THRESHOLD_SCALE * decomp.spectral_norm();
    let dim = g.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    for (i, &lambda) in decomp.eigenvalues().iter().enumerate() {
        if lambda <= cut {
            continue;
        }
        let u = decomp.vectors().column(i);
        let scale = 1.0 / lambda.sqrt();
        for a in 0..dim {
            for b in 0..dim {
                out[(a, b)] += scale * u[a] * u[b];
            }
        }
    }
    Ok(out)
}

fn require_smoothing_regime(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 0.5) {
        return Err(ArborError::Domain {
            param: t,
            what: "smoothed pairings need 0 < t <= 1/2".into(),
        });
    }
    Ok(())
}

/// Largest pairing Rayleigh quotient `|<A x, y>| / (|x| |y|)` of the
/// compressed sphere average over level-`level` vectors, in the chosen
/// geometry: the top singular value of the whitened compression. A lower
/// bound for the operator norm of the full sphere average.
pub fn rd_lower_bound(
    ctx: &GroupContext,
    t: f64,
    n: usize,
    level: usize,
    pairing: Pairing,
) -> Result<f64> {
    let nu = rat_to_f64(&level_measure(ctx, level));
    let (form, gram) = match pairing {
        Pairing::L2 => {
            let raw = sphere_average_compression(ctx, t, n, level)?;
            let dim = raw.nrows();
            (raw, DMatrix::from_diagonal_element(dim, dim, nu))
        }
        Pairing::Ht => {
            require_smoothing_regime(t)?;
            let raw = sphere_average_compression(ctx, -t, n, level)?;
            let w = smoothing_matrix(ctx, t, level)?;
            let g = gram_matrix(ctx, t, level)?;
            let dim = raw.nrows();
            let gm = DMatrix::from_fn(dim, dim, |i, j| g.entry(i, j));
            (raw * &w, gm)
        }
        Pairing::Kt => {
            require_smoothing_regime(t)?;
            let raw = sphere_average_compression(ctx, -t, n, level)?;
            let w = smoothing_matrix(ctx, t, level)?;
            let g = w.transpose() * &w * nu;
            (w.transpose() * raw * &w, g)
        }
    };
    let white = whitener(&gram)?;
    let squeezed = &white * form * &white;
    let svals = squeezed.svd(false, false).singular_values;
    Ok(svals.iter().cloned().fold(0.0, f64::max))
}

/// Measured compression norm of the uniform sphere average against the
/// spherical envelope, in the boundary L2 geometry. The ratio of the two
/// is the quantity the calibrated envelope constant must dominate.
pub fn rd_consistency(
    ctx: &GroupContext,
    t: f64,
    n: usize,
    probe_level: usize,
) -> Result<(f64, f64)> {
    let lower = rd_lower_bound(ctx, t, n, probe_level, Pairing::L2)?;
    Ok((lower, spherical_envelope(ctx, t, n)))
}
