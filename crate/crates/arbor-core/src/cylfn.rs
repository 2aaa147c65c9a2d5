//! Locally constant boundary functions and the boundary representation.
//!
//! A level-k cylinder function is a dense complex vector indexed by the
//! level-k cylinders in lexicographic order. Values are doubles, hence exact
//! dyadic rationals; the L2 pairing multiplies them with exact cylinder
//! masses in rational arithmetic and rounds once at the end.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;

use crate::context::GroupContext;
use crate::error::{ArborError, Result};
use crate::measure::{level_measure, rat_to_f64};
use crate::word::{common_prefix, sphere_rank, Letter, ReducedWord, SphereCursor, DEFAULT_ENUM_BUDGET};

/// Exact complex number with rational parts; the carrier of error-free
/// pairings of dyadic function values against cylinder masses.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl RationalComplex {
    pub fn zero() -> Self {
        RationalComplex { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn from_f64(z: Complex64) -> Self {
        let part = |x: f64| {
            BigRational::from_float(x).expect("function values must be finite")
        };
        RationalComplex { re: part(z.re), im: part(z.im) }
    }

    pub fn conj(&self) -> Self {
        RationalComplex { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn add_assign(&mut self, other: &RationalComplex) {
        self.re += &other.re;
        self.im += &other.im;
    }

    pub fn mul(&self, other: &RationalComplex) -> Self {
        RationalComplex {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        RationalComplex { re: &self.re * s, im: &self.im * s }
    }

    /// The one rounding step: both parts through the shared conversion.
    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
}

/// A level-k locally constant function on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction {
    level: usize,
    values: Vec<Complex64>,
}

fn level_dim(ctx: &GroupContext, level: usize) -> Result<usize> {
    let size = ctx.sphere_size(level);
    if size > DEFAULT_ENUM_BUDGET {
        return Err(ArborError::Budget { requested: size, budget: DEFAULT_ENUM_BUDGET });
    }
    Ok(size as usize)
}

impl CylinderFunction {
    pub fn constant(c: Complex64) -> Self {
        CylinderFunction { level: 0, values: vec![c] }
    }

    pub fn one() -> Self {
        CylinderFunction::constant(Complex64::new(1.0, 0.0))
    }

    /// Indicator of the cylinder of `u`, at level `|u|`.
    pub fn indicator(ctx: &GroupContext, u: &ReducedWord) -> Result<Self> {
        if u.is_empty() {
            return Ok(CylinderFunction::one());
        }
        let dim = level_dim(ctx, u.len())?;
        let mut values = vec![Complex64::ZERO; dim];
        values[sphere_rank(ctx, u.letters())] = Complex64::new(1.0, 0.0);
        Ok(CylinderFunction { level: u.len(), values })
    }

    pub fn from_values(ctx: &GroupContext, level: usize, values: Vec<Complex64>) -> Result<Self> {
        let dim = level_dim(ctx, level)?;
        if values.len() != dim {
            return Err(ArborError::pre(format!(
                "level {level} needs {dim} values, got {}",
                values.len()
            )));
        }
        Ok(CylinderFunction { level, values })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Value on the cylinder of any word extending the level-k prefix of `x`.
    /// Requires `|x| >= level`.
    pub fn eval_prefix(&self, ctx: &GroupContext, x: &[Letter]) -> Complex64 {
        debug_assert!(x.len() >= self.level);
        self.values[sphere_rank(ctx, &x[..self.level])]
    }

    /// Copies values to all level-`k2` sub-cylinders. Lexicographic ranks
    /// refine blockwise, so this is value repetition.
    pub fn refine(&self, ctx: &GroupContext, k2: usize) -> Result<CylinderFunction> {
        if k2 < self.level {
            return Err(ArborError::pre(format!(
                "cannot refine level {} down to {k2}",
                self.level
            )));
        }
        if k2 == self.level {
            return Ok(self.clone());
        }
        let dim = level_dim(ctx, k2)?;
        let block = dim / self.values.len();
        let mut values = Vec::with_capacity(dim);
        for v in &self.values {
            values.extend(std::iter::repeat(*v).take(block));
        }
        Ok(CylinderFunction { level: k2, values })
    }

    pub fn conj(&self) -> CylinderFunction {
        CylinderFunction {
            level: self.level,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> CylinderFunction {
        CylinderFunction {
            level: self.level,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, ctx: &GroupContext, other: &CylinderFunction) -> Result<CylinderFunction> {
        let k = self.level.max(other.level);
        let mut a = self.refine(ctx, k)?;
        let b = other.refine(ctx, k)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x += y;
        }
        Ok(a)
    }

    pub fn sub(&self, ctx: &GroupContext, other: &CylinderFunction) -> Result<CylinderFunction> {
        self.add(ctx, &other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Pointwise product at the common refinement.
    pub fn pointwise_mul(&self, ctx: &GroupContext, other: &CylinderFunction) -> Result<CylinderFunction> {
        let k = self.level.max(other.level);
        let mut a = self.refine(ctx, k)?;
        let b = other.refine(ctx, k)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x *= y;
        }
        Ok(a)
    }

    /// Exact integral against the boundary measure.
    pub fn integral_exact(&self, ctx: &GroupContext) -> RationalComplex {
        let mass = level_measure(ctx, self.level);
        let mut acc = RationalComplex::zero();
        for v in &self.values {
            acc.add_assign(&RationalComplex::from_f64(*v).scale(&mass));
        }
        acc
    }

    /// Exact prefix integrals: `sums[j][rank]` is the integral of `self`
    /// over the level-`j` cylinder of that rank, for `j = 0..=level`.
    pub fn prefix_integrals_exact(&self, ctx: &GroupContext) -> Vec<Vec<RationalComplex>> {
        let k = self.level;
        let mass = level_measure(ctx, k);
        let mut sums: Vec<Vec<RationalComplex>> = Vec::with_capacity(k + 1);
        sums.push(
            self.values
                .iter()
                .map(|v| RationalComplex::from_f64(*v).scale(&mass))
                .collect(),
        );
        for j in (0..k).rev() {
            let child_dim = sums.last().unwrap().len();
            let dim = ctx.sphere_size(j) as usize;
            let block = child_dim / dim;
            let children = sums.last().unwrap();
            let mut row = Vec::with_capacity(dim);
            for i in 0..dim {
                let mut acc = RationalComplex::zero();
                for c in &children[i * block..(i + 1) * block] {
                    acc.add_assign(c);
                }
                row.push(acc);
            }
            sums.push(row);
        }
        sums.reverse();
        sums
    }
}

/// Exact L2 pairing `integral of v . conj(w)` with rational cylinder masses.
pub fn l2_inner_exact(
    ctx: &GroupContext,
    v: &CylinderFunction,
    w: &CylinderFunction,
) -> RationalComplex {
    let k = v.level.max(w.level);
    let dim = ctx.sphere_size(k) as usize;
    let mass = level_measure(ctx, k);
    let vb = dim / v.values.len();
    let wb = dim / w.values.len();
    let mut acc = RationalComplex::zero();
    // The integrand is constant on blocks of the finer structure, so the
    // number of rational multiplications is max(dim_v, dim_w), not dim.
    let block = vb.min(wb);
    let block_mass = &mass * BigRational::from_integer(block.into());
    for i in (0..dim).step_by(block) {
        let t = RationalComplex::from_f64(v.values[i / vb])
            .mul(&RationalComplex::from_f64(w.values[i / wb]).conj());
        acc.add_assign(&t.scale(&block_mass));
    }
    acc
}

pub fn l2_inner(ctx: &GroupContext, v: &CylinderFunction, w: &CylinderFunction) -> Complex64 {
    l2_inner_exact(ctx, v, w).to_complex64()
}

pub fn l2_norm_sq(ctx: &GroupContext, v: &CylinderFunction) -> f64 {
    l2_inner(ctx, v, v).re
}

/// The boundary representation applied to `v`: the conformal factor to the
/// power `1/2 + t` times the translated function, exact at level
/// `level(v) + |gamma|` where both ingredients are locally constant.
pub fn apply_pi(
    ctx: &GroupContext,
    t: f64,
    gamma: &ReducedWord,
    v: &CylinderFunction,
) -> Result<CylinderFunction> {
    let k = v.level();
    let big_l = gamma.len();
    if big_l == 0 {
        return Ok(v.clone());
    }
    let out_level = k + big_l;
    let dim = level_dim(ctx, out_level)?;
    let g = gamma.letters();
    // Conformal factors by common-prefix depth c: (2r-1)^{(1/2+t)(2c-L)}.
    let factors: Vec<f64> = (0..=big_l)
        .map(|c| ctx.qpow((0.5 + t) * (2.0 * c as f64 - big_l as f64)))
        .collect();
    let mut src = vec![0 as Letter; k];
    let mut values = Vec::with_capacity(dim);
    let mut cursor = SphereCursor::new(ctx, out_level);
    loop {
        let u = cursor.current();
        let c = common_prefix(u, g);
        // first k letters of gamma^{-1} u: the inverted gamma-suffix in
        // reverse, then the tail of u past the cancellation
        let from_gamma = (big_l - c).min(k);
        for (j, s) in src.iter_mut().enumerate().take(from_gamma) {
            *s = ctx.involute(g[big_l - 1 - j]);
        }
        for (j, s) in src.iter_mut().enumerate().skip(from_gamma) {
            *s = u[c + (j - (big_l - c))];
        }
        values.push(v.values[sphere_rank(ctx, &src)] * factors[c]);
        if !cursor.advance() {
            break;
        }
    }
    debug_assert_eq!(values.len(), dim);
    Ok(CylinderFunction { level: out_level, values })
}

/// Supremum norm plus the visual-metric difference seminorm
/// `max |w(u)-w(v)| e^{eps m(u,v)}` over distinct same-level cylinders.
pub fn lipschitz_norm(ctx: &GroupContext, w: &CylinderFunction) -> f64 {
    let sup = w.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if w.level == 0 {
        return sup;
    }
    let words: Vec<ReducedWord> = {
        let mut out = Vec::with_capacity(w.dim());
        let mut cursor = SphereCursor::new(ctx, w.level);
        loop {
            out.push(cursor.to_word());
            if !cursor.advance() {
                break;
            }
        }
        out
    };
    let mut semi = 0.0f64;
    for (i, u) in words.iter().enumerate() {
        for (j, v) in words.iter().enumerate().skip(i + 1) {
            let diff = (w.values[i] - w.values[j]).norm();
            if diff == 0.0 {
                continue;
            }
            let m = u.common_prefix_len(v);
            semi = semi.max(diff * (ctx.epsilon() * m as f64).exp());
        }
    }
    sup + semi
}

/// A continuous test function on the compactified tree: a boundary part plus
/// interior values on all orbit points shorter than the level. Points at
/// least as deep as the level read the boundary part through their prefix,
/// which makes the function locally constant near the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeTestFunction {
    boundary: CylinderFunction,
    interior: Vec<Vec<Complex64>>,
}

impl TreeTestFunction {
    pub fn constant(c: Complex64) -> Self {
        TreeTestFunction { boundary: CylinderFunction::constant(c), interior: Vec::new() }
    }

    pub fn one() -> Self {
        TreeTestFunction::constant(Complex64::new(1.0, 0.0))
    }

    /// Continuous extension of a boundary function into the tree by
    /// conditional expectation: the value at an interior point is the mean
    /// of the boundary values over its shadow.
    pub fn from_boundary(ctx: &GroupContext, boundary: CylinderFunction) -> Self {
        let k = boundary.level();
        let mut interior: Vec<Vec<Complex64>> = Vec::with_capacity(k);
        if k > 0 {
            let mut level_means = boundary.values().to_vec();
            for j in (0..k).rev() {
                let dim = ctx.sphere_size(j) as usize;
                let block = level_means.len() / dim;
                let mut means = Vec::with_capacity(dim);
                for i in 0..dim {
                    let mut acc = Complex64::ZERO;
                    for v in &level_means[i * block..(i + 1) * block] {
                        acc += v;
                    }
                    means.push(acc / block as f64);
                }
                interior.push(means.clone());
                level_means = means;
            }
            interior.reverse();
        }
        TreeTestFunction { boundary, interior }
    }

    pub fn from_parts(
        ctx: &GroupContext,
        boundary: CylinderFunction,
        interior: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if interior.len() != boundary.level() {
            return Err(ArborError::pre(format!(
                "need interior values for lengths 0..{}, got {} rows",
                boundary.level(),
                interior.len()
            )));
        }
        for (j, row) in interior.iter().enumerate() {
            if row.len() != ctx.sphere_size(j) as usize {
                return Err(ArborError::pre(format!(
                    "interior row {j} has {} values, sphere holds {}",
                    row.len(),
                    ctx.sphere_size(j)
                )));
            }
        }
        Ok(TreeTestFunction { boundary, interior })
    }

    pub fn level(&self) -> usize {
        self.boundary.level()
    }

    /// The boundary restriction.
    pub fn boundary(&self) -> &CylinderFunction {
        &self.boundary
    }

    pub fn eval_letters(&self, ctx: &GroupContext, x: &[Letter]) -> Complex64 {
        if x.len() >= self.boundary.level() {
            self.boundary.eval_prefix(ctx, x)
        } else {
            self.interior[x.len()][sphere_rank(ctx, x)]
        }
    }

    pub fn eval(&self, ctx: &GroupContext, x: &ReducedWord) -> Complex64 {
        self.eval_letters(ctx, x.letters())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx2() -> GroupContext {
        GroupContext::with_rank(2).unwrap()
    }

    fn w(ctx: &GroupContext, s: &str) -> ReducedWord {
        ReducedWord::parse(ctx, s).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn refine_copies_to_subcylinders() {
        let ctx = ctx2();
        let one = CylinderFunction::one().refine(&ctx, 3).unwrap();
        assert_eq!(one.dim(), 36);
        assert!(one.values().iter().all(|v| *v == re(1.0)));

        let ind = CylinderFunction::indicator(&ctx, &w(&ctx, "a")).unwrap();
        let fine = ind.refine(&ctx, 2).unwrap();
        let expect_on = ["aa", "ab", "aB"];
        let mut on = Vec::new();
        let mut cursor = SphereCursor::new(&ctx, 2);
        loop {
            let word = cursor.to_word();
            let v = fine.values()[sphere_rank(&ctx, word.letters())];
            if v == re(1.0) {
                on.push(word.display(&ctx));
            } else {
                assert_eq!(v, re(0.0));
            }
            if !cursor.advance() {
                break;
            }
        }
        assert_eq!(on, expect_on);
    }

    #[test]
    fn l2_inner_examples() {
        let ctx = ctx2();
        let one = CylinderFunction::one();
        assert_eq!(l2_inner(&ctx, &one, &one), re(1.0));
        let a = CylinderFunction::indicator(&ctx, &w(&ctx, "a")).unwrap();
        let b = CylinderFunction::indicator(&ctx, &w(&ctx, "b")).unwrap();
        assert_eq!(l2_inner(&ctx, &a, &b), re(0.0));
        assert_eq!(l2_inner(&ctx, &a, &one), re(0.25));
        // refinement invariance, exactly
        let a5 = a.refine(&ctx, 5).unwrap();
        assert_eq!(l2_inner_exact(&ctx, &a5, &a5), l2_inner_exact(&ctx, &a, &a));
    }

    #[test]
    fn representation_identity_and_unitarity() {
        let ctx = ctx2();
        let v = CylinderFunction::from_values(
            &ctx,
            1,
            vec![re(1.0), re(-2.0), Complex64::new(0.5, 1.5), re(0.0)],
        )
        .unwrap();
        let id = apply_pi(&ctx, 0.37, &ReducedWord::empty(), &v).unwrap();
        assert_eq!(id, v);

        for g in ["a", "B", "ab", "aB"] {
            let gamma = w(&ctx, g);
            let moved = apply_pi(&ctx, 0.0, &gamma, &v).unwrap();
            let lhs = l2_inner_exact(&ctx, &moved, &moved);
            let rhs = l2_inner_exact(&ctx, &v, &v);
            // pi_0 is unitary; values involve irrational conformal factors,
            // so compare the rounded pairings
            assert!((lhs.to_complex64() - rhs.to_complex64()).norm() < 1e-14);
        }
    }

    #[test]
    fn pi_half_integral_is_mass_preserving() {
        // t = 1/2 twists by the full conformal derivative, so the integral
        // of pi_{1/2}(gamma) 1 is the total pushforward mass 1.
        let ctx = ctx2();
        for g in ["a", "ab", "aBa"] {
            let gamma = w(&ctx, g);
            let moved = apply_pi(&ctx, 0.5, &gamma, &CylinderFunction::one()).unwrap();
            let total = l2_inner(&ctx, &moved, &CylinderFunction::one());
            assert!((total - re(1.0)).norm() < 1e-13, "gamma={g} total={total}");
        }
    }

    #[test]
    fn cocycle_on_small_cases() {
        let ctx = ctx2();
        let v = CylinderFunction::from_values(&ctx, 1, vec![re(1.0), re(2.0), re(-1.0), re(3.0)])
            .unwrap();
        for t in [0.0, 0.25, -0.5] {
            for g1 in ["a", "B"] {
                for g2 in ["b", "A"] {
                    let g1 = w(&ctx, g1);
                    let g2 = w(&ctx, g2);
                    let g12 = g1.multiply(&ctx, &g2);
                    let lhs = apply_pi(&ctx, t, &g12, &v).unwrap();
                    let rhs = apply_pi(&ctx, t, &g1, &apply_pi(&ctx, t, &g2, &v).unwrap()).unwrap();
                    let k = lhs.level().max(rhs.level());
                    let lhs = lhs.refine(&ctx, k).unwrap();
                    let rhs = rhs.refine(&ctx, k).unwrap();
                    for (x, y) in lhs.values().iter().zip(rhs.values()) {
                        assert!((x - y).norm() <= 1e-14 * (1.0 + x.norm()));
                    }
                }
            }
        }
    }

    #[test]
    fn growth_bound_on_samples() {
        let ctx = ctx2();
        let v = CylinderFunction::from_values(&ctx, 1, vec![re(1.0), re(0.5), re(-0.25), re(2.0)])
            .unwrap();
        let norm_v = l2_norm_sq(&ctx, &v).sqrt();
        for t in [0.1f64, 0.25, 0.5, -0.25] {
            for g in ["a", "ab", "abA", "BaB"] {
                let gamma = w(&ctx, g);
                let moved = apply_pi(&ctx, t, &gamma, &v).unwrap();
                let bound = 2.0 * (t.abs() * ctx.growth() * gamma.len() as f64).exp() * norm_v;
                assert!(l2_norm_sq(&ctx, &moved).sqrt() <= bound);
            }
        }
    }

    #[test]
    fn lipschitz_norm_examples() {
        let ctx = ctx2();
        let constant = CylinderFunction::constant(re(-2.5)).refine(&ctx, 2).unwrap();
        assert_eq!(lipschitz_norm(&ctx, &constant), 2.5);
        let a = CylinderFunction::indicator(&ctx, &w(&ctx, "a")).unwrap();
        assert_eq!(lipschitz_norm(&ctx, &a), 2.0);
        assert_eq!(lipschitz_norm(&ctx, &a.scale(re(3.0))), 6.0);
    }

    #[test]
    fn tree_function_prefix_rule_and_means() {
        let ctx = ctx2();
        let a = CylinderFunction::indicator(&ctx, &w(&ctx, "a")).unwrap();
        let f = TreeTestFunction::from_boundary(&ctx, a);
        assert_eq!(f.eval(&ctx, &w(&ctx, "abA")), re(1.0));
        assert_eq!(f.eval(&ctx, &w(&ctx, "ba")), re(0.0));
        // interior: at the root the mean is nu(C_a) = 1/4
        assert_eq!(f.eval(&ctx, &ReducedWord::empty()), re(0.25));
        // continuity along a ray into C_a
        let ray = crate::word::Ray::hat(&ctx, &w(&ctx, "ab")).unwrap();
        for m in 2..6 {
            assert_eq!(f.eval(&ctx, &ray.prefix_word(m)), re(1.0));
        }
    }

    #[test]
    fn prefix_integrals_are_consistent() {
        let ctx = ctx2();
        let v = CylinderFunction::from_values(
            &ctx,
            2,
            (0..12).map(|i| re(i as f64 * 0.125)).collect(),
        )
        .unwrap();
        let sums = v.prefix_integrals_exact(&ctx);
        assert_eq!(sums.len(), 3);
        assert_eq!(sums[0][0], v.integral_exact(&ctx));
        // each level sums to the total
        for row in &sums {
            let mut acc = RationalComplex::zero();
            for s in row {
                acc.add_assign(s);
            }
            assert_eq!(acc, sums[0][0]);
        }
    }
}
