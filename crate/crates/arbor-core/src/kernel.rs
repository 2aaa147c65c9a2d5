//! The boundary kernel `(2r-1)^{(1-2t) <xi,eta>}` and the operators built
//! from it: the sigma integrals and their truncations, the intertwining
//! bilinear form, exact level-k Gram compressions, Dirichlet and Besov
//! forms, normalized boundary averages, and the derived inner products.
//!
//! Everything here exploits one structural fact: the kernel is constant on
//! common-prefix strata. Pairings of level-k functions therefore reduce to
//! k+1 stratum sums over subtree aggregates, computed in O(dim k) instead
//! of O(dim^2), and the diagonal "singular" part is an exact geometric
//! series rather than a quadrature.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::coeff::stratum_mass_table;
use crate::context::GroupContext;
use crate::cylfn::CylinderFunction;
use crate::error::{ArborError, Result};
use crate::measure::{level_measure, rat_to_f64};
use crate::sum::{Neumaier, NeumaierComplex};
use crate::word::{SphereCursor, DEFAULT_ENUM_BUDGET};

/// `(2r-1)^{(1-2t)m}`, the kernel value on the depth-`m` stratum.
pub fn kernel_weight(ctx: &GroupContext, t: f64, m: usize) -> f64 {
    ctx.qpow((1.0 - 2.0 * t) * m as f64)
}

/// `(2r-1)^{-2t}`, the per-level decay of the kernel against the measure.
fn stratum_decay(ctx: &GroupContext, t: f64) -> f64 {
    ctx.qpow(-2.0 * t)
}

/// Integral of the kernel against the boundary measure; finite exactly for
/// t > 0, and constant in the boundary variable by homogeneity.
pub fn sigma(ctx: &GroupContext, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(ArborError::Divergent {
            param: t,
            what: "the kernel integral converges only for t > 0".into(),
        });
    }
    let q = ctx.alphabet_size() as f64;
    let y = stratum_decay(ctx, t);
    Ok((q - 1.0) / q + (q - 2.0) / q * y / (1.0 - y))
}

/// Partial sums of the defining series, from exact annulus masses. Kept as
/// the independent oracle for the closed form.
pub fn sigma_series(ctx: &GroupContext, t: f64, m_max: usize) -> f64 {
    let mut acc = Neumaier::new();
    for m in 0..=m_max {
        let mass = crate::measure::annulus_profile(ctx, crate::measure::ProfileTarget::Boundary, m)
            .expect("boundary profile is total");
        acc.add(rat_to_f64(&mass) * kernel_weight(ctx, t, m));
    }
    acc.value()
}

/// Head of the sigma series: strata below `ceil(a)`. A finite sum, defined
/// for every real t.
pub fn sigma_truncated_below(ctx: &GroupContext, t: f64, a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(ArborError::pre("truncation radius must be a finite nonnegative real"));
    }
    let cut = a.ceil() as usize;
    let mut acc = Neumaier::new();
    for m in 0..cut {
        let mass = crate::measure::annulus_profile(ctx, crate::measure::ProfileTarget::Boundary, m)
            .expect("boundary profile is total");
        acc.add(rat_to_f64(&mass) * kernel_weight(ctx, t, m));
    }
    Ok(acc.value())
}

/// Tail of the sigma series: strata from `ceil(a)` on, in closed geometric
/// form. For t < 0 the series proper diverges and this returns the
/// geometric continuation, which is what the tail bounds refer to.
pub fn sigma_truncated_above(ctx: &GroupContext, t: f64, a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(ArborError::pre("truncation radius must be a finite nonnegative real"));
    }
    if t == 0.0 {
        return Err(ArborError::Divergent {
            param: t,
            what: "the truncated tail has no finite value at t = 0".into(),
        });
    }
    let cut = a.ceil() as usize;
    if cut == 0 {
        return sigma(ctx, t);
    }
    let q = ctx.alphabet_size() as f64;
    let y = stratum_decay(ctx, t);
    Ok((q - 2.0) / q * ctx.qpow(-2.0 * t * cut as f64) / (1.0 - y))
}

/// The kernel integral seen from an interior point: a finite stratum sum,
/// defined for every real t, increasing to `sigma(t)` along rays.
pub fn sigma_interior(ctx: &GroupContext, t: f64, x: &crate::word::ReducedWord) -> f64 {
    let n = x.len();
    let strata = stratum_mass_table(ctx, n);
    let mut acc = Neumaier::new();
    for (m, mass) in strata.iter().enumerate() {
        acc.add(mass * kernel_weight(ctx, t, m));
    }
    acc.value()
}

/// Same-cylinder kernel energy at level k, strata from `start` on:
/// the exact geometric series `sum_{m>=start} (F_k(m)-F_k(m+1)) W^m` with
/// `F_k(m) = (2r-1)^{m-k} nu_m^2`, in closed form.
fn self_energy_from(ctx: &GroupContext, t: f64, k: usize, start: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(ArborError::Divergent {
            param: t,
            what: "the same-cylinder energy converges only for t > 0".into(),
        });
    }
    if k < 1 {
        return Err(ArborError::pre("self energy needs level k >= 1"));
    }
    debug_assert!(start >= k);
    let q = ctx.alphabet_size() as f64;
    let y = stratum_decay(ctx, t);
    let scale = (q - 2.0) * ctx.qpow(1.0 - k as f64) / (q * q);
    Ok(scale * ctx.qpow(-2.0 * t * start as f64) / (1.0 - y))
}

/// Diagonal Gram entry: the kernel integrated over one level-k cylinder
/// squared, exact by the geometric stratification of the diagonal.
pub fn self_energy(ctx: &GroupContext, t: f64, k: usize) -> Result<f64> {
    self_energy_from(ctx, t, k, k)
}

/// Term-by-term partial sums of the self-energy series with exact rational
/// stratum masses; the independent oracle for the closed form.
pub fn self_energy_series(ctx: &GroupContext, t: f64, k: usize, terms: usize) -> f64 {
    let q = ctx.alphabet_size() as i64;
    let f = |m: usize| -> BigRational {
        // (2r-1)^{m-k} nu_m^2
        let pow = BigRational::from_integer((q - 1).into()).pow(m as i32 - k as i32);
        let nu = level_measure(ctx, m);
        pow * &nu * &nu
    };
    let mut acc = Neumaier::new();
    for m in k..k + terms {
        let mass = rat_to_f64(&(f(m) - f(m + 1)));
        if mass == 0.0 {
            // the exact masses have underflowed; every later term is
            // smaller still
            break;
        }
        acc.add(mass * kernel_weight(ctx, t, m));
    }
    acc.value()
}

/// Subtree sums of raw values, level by level: `pyramid[j][p]` is the sum
/// of the level-k values below the rank-`p` vertex at level `j`.
fn value_pyramid(ctx: &GroupContext, values: &[Complex64], k: usize) -> Vec<Vec<Complex64>> {
    let mut levels = vec![values.to_vec()];
    for j in (0..k).rev() {
        let child = levels.last().unwrap();
        let dim = ctx.sphere_size(j) as usize;
        let block = child.len() / dim;
        let mut row = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut acc = NeumaierComplex::new();
            for c in &child[i * block..(i + 1) * block] {
                acc.add(*c);
            }
            row.push(acc.value());
        }
        levels.push(row);
    }
    levels.reverse();
    levels
}

/// `Q[m] = sum over level-m vertices of T_a(p) conj(T_b(p))`: the
/// double-sum of `a(u) conj(b(v))` over pairs with common prefix >= m.
fn stratum_pair_sums(ctx: &GroupContext, a: &[Complex64], b: &[Complex64], k: usize) -> Vec<Complex64> {
    let pa = value_pyramid(ctx, a, k);
    let pb = value_pyramid(ctx, b, k);
    (0..=k)
        .map(|m| {
            let mut acc = NeumaierComplex::new();
            for (x, y) in pa[m].iter().zip(&pb[m]) {
                acc.add(x * y.conj());
            }
            acc.value()
        })
        .collect()
}

fn common_refinement(
    ctx: &GroupContext,
    a: &CylinderFunction,
    b: &CylinderFunction,
) -> Result<(CylinderFunction, CylinderFunction, usize)> {
    let k = a.level().max(b.level());
    Ok((a.refine(ctx, k)?, b.refine(ctx, k)?, k))
}

/// The intertwining bilinear form `B_t(a,b)`: the kernel integrated against
/// `a(eta) conj(b(xi))`. Exact stratification: off-diagonal strata from
/// subtree pair sums, the diagonal from the closed-form self energy.
pub fn kernel_form(
    ctx: &GroupContext,
    t: f64,
    a: &CylinderFunction,
    b: &CylinderFunction,
) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(ArborError::Divergent {
            param: t,
            what: "the kernel is not integrable for t <= 0; the Dirichlet form is the finite object there".into(),
        });
    }
    let (a, b, k) = common_refinement(ctx, a, b)?;
    if k == 0 {
        return Ok(a.values()[0] * b.values()[0].conj() * sigma(ctx, t)?);
    }
    let q = stratum_pair_sums(ctx, a.values(), b.values(), k);
    let nu = level_measure(ctx, k);
    let nu_sq = rat_to_f64(&(&nu * &nu));
    let self_e = self_energy(ctx, t, k)?;
    let mut acc = NeumaierComplex::new();
    for m in 0..k {
        acc.add((q[m] - q[m + 1]) * nu_sq * kernel_weight(ctx, t, m));
    }
    acc.add(q[k] * self_e);
    Ok(acc.value())
}

/// Number of level-k words sharing a common prefix of exactly `m` with a
/// fixed level-k word.
fn stratum_partner_count(ctx: &GroupContext, k: usize, m: usize) -> f64 {
    let b = ctx.branching() as u128;
    let q = ctx.alphabet_size() as u128;
    debug_assert!(m < k);
    let count = if m == 0 { (q - 1) * b.pow((k - 1) as u32) } else { (q - 2) * b.pow((k - m - 1) as u32) };
    count as f64
}

/// The Dirichlet form `E_t(a,b) = (1/2) double-integral of
/// (a(xi)-a(eta)) conj(b(xi)-b(eta)) k_t`. Same-cylinder pairs contribute
/// nothing, so this is finite for every real t.
pub fn dirichlet_form(
    ctx: &GroupContext,
    t: f64,
    a: &CylinderFunction,
    b: &CylinderFunction,
) -> Result<Complex64> {
    let (a, b, k) = common_refinement(ctx, a, b)?;
    if k == 0 {
        return Ok(Complex64::ZERO);
    }
    let q = stratum_pair_sums(ctx, a.values(), b.values(), k);
    let nu = level_measure(ctx, k);
    let nu_sq = rat_to_f64(&(&nu * &nu));
    let mut acc = NeumaierComplex::new();
    for m in 0..k {
        let cross = q[m] - q[m + 1];
        let diag = q[k] * stratum_partner_count(ctx, k, m);
        acc.add((diag - cross) * nu_sq * kernel_weight(ctx, t, m));
    }
    Ok(acc.value())
}

/// Twice the Dirichlet energy: the squared difference seminorm under the
/// kernel weight. Defined for every real t; zero exactly on constants.
pub fn besov_seminorm(ctx: &GroupContext, t: f64, v: &CylinderFunction) -> Result<f64> {
    Ok(2.0 * dirichlet_form(ctx, t, v, v)?.re)
}

/// All pairings `B_t(a, 1_{C_u})` over the level-K sphere in one pass:
/// walk each word's prefix path through the subtree sums. O(dim K).
fn form_against_indicators(
    ctx: &GroupContext,
    t: f64,
    a: &CylinderFunction,
    big_k: usize,
) -> Result<Vec<Complex64>> {
    if !(t > 0.0) {
        return Err(ArborError::Divergent {
            param: t,
            what: "the kernel is not integrable for t <= 0".into(),
        });
    }
    if big_k < a.level() {
        return Err(ArborError::pre(format!(
            "averaging level {big_k} is coarser than the function level {}",
            a.level()
        )));
    }
    let a = a.refine(ctx, big_k)?;
    if big_k == 0 {
        return Ok(vec![a.values()[0] * sigma(ctx, t)?]);
    }
    let pyramid = value_pyramid(ctx, a.values(), big_k);
    let nu = level_measure(ctx, big_k);
    let nu_sq = rat_to_f64(&(&nu * &nu));
    let weights: Vec<f64> = (0..big_k).map(|m| nu_sq * kernel_weight(ctx, t, m)).collect();
    let self_e = self_energy(ctx, t, big_k)?;
    let b = ctx.branching();
    let dim = a.dim();
    let mut out = Vec::with_capacity(dim);
    let mut path = vec![0usize; big_k + 1];
    let mut cursor = SphereCursor::new(ctx, big_k);
    loop {
        let u = cursor.current();
        // ranks of the prefixes of u, by the same Horner fold as the
        // sphere enumeration order
        for j in 0..big_k {
            let idx = if j == 0 {
                u[0] as usize
            } else {
                let forbidden = ctx.involute(u[j - 1]);
                (if u[j] < forbidden { u[j] } else { u[j] - 1 }) as usize
            };
            path[j + 1] = path[j] * if j == 0 { ctx.alphabet_size() } else { b } + idx;
        }
        let mut acc = NeumaierComplex::new();
        for (m, w) in weights.iter().enumerate() {
            acc.add((pyramid[m][path[m]] - pyramid[m + 1][path[m + 1]]) * *w);
        }
        acc.add(pyramid[big_k][path[big_k]] * self_e);
        out.push(acc.value());
        if !cursor.advance() {
            break;
        }
    }
    Ok(out)
}

/// Level-K conditional expectation of the normalized kernel average
/// `R_t a = I_t a / sigma_t`. Numerator and denominator go through the
/// same stratified pass, so constants are fixed bit-exactly.
pub fn riesz_boundary_avg(
    ctx: &GroupContext,
    t: f64,
    a: &CylinderFunction,
    big_k: usize,
) -> Result<CylinderFunction> {
    let num = form_against_indicators(ctx, t, a, big_k)?;
    let den = form_against_indicators(ctx, t, &CylinderFunction::one(), big_k)?;
    let values = num.iter().zip(&den).map(|(n, d)| n / d.re).collect();
    CylinderFunction::from_values(ctx, big_k, values)
}

/// `<P_K I_t a, P_K I_t b>` at a fixed averaging level K.
fn kt_cutoff(
    ctx: &GroupContext,
    t: f64,
    a: &CylinderFunction,
    b: &CylinderFunction,
    big_k: usize,
) -> Result<Complex64> {
    let na = form_against_indicators(ctx, t, a, big_k)?;
    let nb = form_against_indicators(ctx, t, b, big_k)?;
    let mut acc = NeumaierComplex::new();
    for (x, y) in na.iter().zip(&nb) {
        acc.add(x * y.conj());
    }
    let nu = rat_to_f64(&level_measure(ctx, big_k));
    Ok(acc.value() / nu)
}

/// Deepest averaging level the doubling refinement will visit.
const KT_LEVEL_BUDGET: usize = 12;

/// The smoothed-space pairing `<I_t a, I_t b>`, computed as level-K
/// conditional-expectation pairings with K doubled until two successive
/// values agree within `tol`. Kernel averages of level-k functions are
/// exactly level-k, so the doubling stabilizes at the first comparison.
pub fn kt_inner(
    ctx: &GroupContext,
    t: f64,
    a: &CylinderFunction,
    b: &CylinderFunction,
    tol: f64,
) -> Result<Complex64> {
    if !(tol > 0.0) {
        return Err(ArborError::pre("tolerance must be positive"));
    }
    let start = a.level().max(b.level()).max(1);
    let mut cap = KT_LEVEL_BUDGET;
    while cap > start && ctx.sphere_size(cap) > DEFAULT_ENUM_BUDGET {
        cap -= 1;
    }
    if start > cap {
        return Err(ArborError::pre(format!(
            "function level {start} exceeds the averaging budget {cap}"
        )));
    }
    let mut prev = kt_cutoff(ctx, t, a, b, start)?;
    let mut level = start;
    let mut steps = 0usize;
    while level * 2 <= cap {
        level *= 2;
        steps += 1;
        let cur = kt_cutoff(ctx, t, a, b, level)?;
        if (cur - prev).norm() < tol * (1.0 + cur.norm()) {
            return Ok(cur);
        }
        prev = cur;
    }
    if steps == 0 {
        // No room to double: the start level saturates the budget. A
        // level-k average is exactly level-k, so the single value stands.
        return Ok(prev);
    }
    Err(ArborError::NoConvergence {
        steps,
        previous: prev.norm(),
        last: kt_cutoff(ctx, t, a, b, level)?.norm(),
        tol,
    })
}

/// The positive-regime inner product: equals the intertwining form, but
/// only inside the parameter range where that form is positive definite.
pub fn ht_inner(
    ctx: &GroupContext,
    t: f64,
    a: &CylinderFunction,
    b: &CylinderFunction,
) -> Result<Complex64> {
    if !(t > 0.0 && t <= 0.5) {
        return Err(ArborError::Domain {
            param: t,
            what: "the kernel form is a positive inner product only for 0 < t <= 1/2".into(),
        });
    }
    kernel_form(ctx, t, a, b)
}

/// Exact level-k compression of the kernel operator as a dense symmetric
/// matrix over cylinder indicators in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    r: usize,
    level: usize,
    t: f64,
    dim: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let mut acc = Neumaier::new();
        for v in &self.entries[i * self.dim..(i + 1) * self.dim] {
            acc.add(*v);
        }
        acc.value()
    }

    pub fn total_sum(&self) -> f64 {
        let mut acc = Neumaier::new();
        for v in &self.entries {
            acc.add(*v);
        }
        acc.value()
    }

    pub fn as_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }
}

fn gram_with_weights(
    ctx: &GroupContext,
    t: f64,
    k: usize,
    weights: &[f64],
    diagonal: f64,
) -> Result<GramMatrix> {
    let size = ctx.sphere_size(k);
    if size * size > DEFAULT_ENUM_BUDGET {
        return Err(ArborError::Budget { requested: size * size, budget: DEFAULT_ENUM_BUDGET });
    }
    let dim = size as usize;
    let mut letters = Vec::with_capacity(dim * k);
    let mut cursor = SphereCursor::new(ctx, k);
    loop {
        letters.extend_from_slice(cursor.current());
        if !cursor.advance() {
            break;
        }
    }
    let word = |i: usize| &letters[i * k..(i + 1) * k];
    let mut entries = vec![0.0f64; dim * dim];
    entries
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(i, row)| {
            let u = word(i);
            for (j, e) in row.iter_mut().enumerate() {
                if i == j {
                    *e = diagonal;
                } else {
                    let v = word(j);
                    let m = u.iter().zip(v).take_while(|(a, b)| a == b).count();
                    *e = weights[m];
                }
            }
        });
    Ok(GramMatrix { r: ctx.rank(), level: k, t, dim, entries })
}

/// The level-k Gram matrix of the kernel over cylinder indicators:
/// `G[u][v]` integrates the kernel over `C_u x C_v`. Off-diagonal entries
/// are single stratum values, the diagonal is the closed-form self energy.
pub fn gram_matrix(ctx: &GroupContext, t: f64, k: usize) -> Result<GramMatrix> {
    if k < 1 {
        return Err(ArborError::pre("gram compression needs level k >= 1"));
    }
    let self_e = self_energy(ctx, t, k)?;
    let nu = level_measure(ctx, k);
    let nu_sq = rat_to_f64(&(&nu * &nu));
    let weights: Vec<f64> = (0..k).map(|m| nu_sq * kernel_weight(ctx, t, m)).collect();
    gram_with_weights(ctx, t, k, &weights, self_e)
}

/// Gram matrix of the kernel restricted to pairs at Gromov product >= a:
/// the deep, near-diagonal part. Off-diagonal strata shallower than
/// `ceil(a)` vanish; the diagonal keeps only the series tail.
pub fn gram_matrix_truncated(ctx: &GroupContext, t: f64, k: usize, a: f64) -> Result<GramMatrix> {
    if k < 1 {
        return Err(ArborError::pre("gram compression needs level k >= 1"));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(ArborError::pre("truncation radius must be a finite nonnegative real"));
    }
    let cut = a.ceil() as usize;
    let diagonal = self_energy_from(ctx, t, k, cut.max(k))?;
    let nu = level_measure(ctx, k);
    let nu_sq = rat_to_f64(&(&nu * &nu));
    let weights: Vec<f64> = (0..k)
        .map(|m| if m < cut { 0.0 } else { nu_sq * kernel_weight(ctx, t, m) })
        .collect();
    gram_with_weights(ctx, t, k, &weights, diagonal)
}

/// File name for a cached Gram matrix, keyed by every input that
/// determines the bytes.
pub fn gram_cache_file_name(ctx: &GroupContext, t: f64, k: usize) -> String {
    format!(
        "gram_r{}_eps{:016x}_t{:016x}_k{}.bin",
        ctx.rank(),
        ctx.epsilon().to_bits(),
        t.to_bits(),
        k
    )
}

const GRAM_HEADER_LEN: usize = 4 + 4 + 8 + 8;

/// Writes a Gram matrix: header {r: u32, k: u32, t: f64, dim: u64}, all
/// little-endian, then row-major doubles. The write lands via a rename so
/// readers never see a torn file.
pub fn save_gram(path: &Path, g: &GramMatrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(GRAM_HEADER_LEN + 8 * g.entries.len());
    bytes.extend_from_slice(&(g.r as u32).to_le_bytes());
    bytes.extend_from_slice(&(g.level as u32).to_le_bytes());
    bytes.extend_from_slice(&g.t.to_le_bytes());
    bytes.extend_from_slice(&(g.dim as u64).to_le_bytes());
    for v in &g.entries {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    std::fs::write(&tmp, &bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a cached Gram matrix and validates the header against the request.
pub fn load_gram(path: &Path, ctx: &GroupContext, t: f64, k: usize) -> Result<GramMatrix> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < GRAM_HEADER_LEN {
        return Err(ArborError::CacheInvalid(format!("{}: truncated header", path.display())));
    }
    let r = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let level = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let t_stored = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    if r != ctx.rank() || level != k || t_stored.to_bits() != t.to_bits() {
        return Err(ArborError::CacheInvalid(format!(
            "{}: header (r={r}, k={level}, t={t_stored}) does not match request (r={}, k={k}, t={t})",
            path.display(),
            ctx.rank()
        )));
    }
    if dim != ctx.sphere_size(k) as usize || bytes.len() != GRAM_HEADER_LEN + 8 * dim * dim {
        return Err(ArborError::CacheInvalid(format!(
            "{}: dimension {dim} inconsistent with payload",
            path.display()
        )));
    }
    let entries = bytes[GRAM_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(GramMatrix { r, level, t, dim, entries })
}

/// Loads the Gram matrix for (ctx, t, k) from `dir`, computing, caching,
/// and evicting stale entries as needed.
pub fn gram_matrix_cached(ctx: &GroupContext, t: f64, k: usize, dir: &Path) -> Result<GramMatrix> {
    let path: PathBuf = dir.join(gram_cache_file_name(ctx, t, k));
    if path.exists() {
        match load_gram(&path, ctx, t, k) {
            Ok(g) => return Ok(g),
            Err(ArborError::CacheInvalid(_)) | Err(ArborError::Io(_)) => {
                let _ = std::fs::remove_file(&path);
            }
            Err(e) => return Err(e),
        }
    }
    let g = gram_matrix(ctx, t, k)?;
    std::fs::create_dir_all(dir)?;
    save_gram(&path, &g)?;
    Ok(g)
}
