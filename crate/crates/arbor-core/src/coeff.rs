//! Matrix coefficients of the boundary representation, grouped by the
//! common-prefix depth of the group element and the boundary point.
//!
//! The integrand of `<pi_t(gamma) v, w>` is constant on each stratum
//! `{xi : <gamma, xi> = c}` once the relevant prefixes of `gamma^{-1} xi`
//! and `xi` are pinned. Strata where both prefixes are determined by
//! `gamma` alone contribute a single product against the exact stratum
//! mass; the remaining strata enumerate only the few letters past the
//! branch point. Cost is O((2r-1)^level (|gamma| + level)) instead of the
//! O((2r-1)^{|gamma|+level}) of the pointwise route.

use num_complex::Complex64;
use num_rational::BigRational;

use crate::context::GroupContext;
use crate::cylfn::{apply_pi, l2_inner, CylinderFunction};
use crate::error::{ArborError, Result};
use crate::measure::{level_measure, rat_to_f64};
use crate::sum::NeumaierComplex;
use crate::word::{sphere_rank, Letter, ReducedWord};

const MAX_LEVEL: usize = 32;

/// `(2r-1)^{(1/2+t)(2m-n)}`, the conformal weight of depth `m` against
/// length `n`. Every radial computation in the crate routes powers through
/// this one expression so that equal inputs give equal bits.
pub fn radial_factor(ctx: &GroupContext, t: f64, m: usize, n: usize) -> f64 {
    ctx.qpow((0.5 + t) * (2.0 * m as f64 - n as f64))
}

/// Measures of the strata `{xi : <gamma, xi> = c}` for `|gamma| = n`,
/// indexed by `c = 0..=n`; exact values rounded once to doubles.
pub fn stratum_mass_table(ctx: &GroupContext, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|c| {
            let mass = if c == n {
                level_measure(ctx, n)
            } else {
                level_measure(ctx, c) - level_measure(ctx, c + 1)
            };
            rat_to_f64(&mass)
        })
        .collect()
}

/// Cylinder masses by level, exact values rounded once to doubles.
pub fn cylinder_mass_table(ctx: &GroupContext, max_level: usize) -> Vec<f64> {
    (0..=max_level).map(|m| rat_to_f64(&level_measure(ctx, m))).collect()
}

/// Precomputed weights for coefficients `<pi_t(gamma) v, w>` with a fixed
/// `t`, fixed word length, and fixed arguments. One plan serves a whole
/// sphere of group elements, which is the shape every experiment loop has.
pub struct CoeffPlan<'a> {
    ctx: &'a GroupContext,
    n: usize,
    v: &'a CylinderFunction,
    w: &'a CylinderFunction,
    factors: Vec<f64>,
    strata: Vec<f64>,
    cylinders: Vec<f64>,
}

impl<'a> CoeffPlan<'a> {
    pub fn new(
        ctx: &'a GroupContext,
        t: f64,
        n: usize,
        v: &'a CylinderFunction,
        w: &'a CylinderFunction,
    ) -> Result<Self> {
        if !t.is_finite() {
            return Err(ArborError::pre("spectral parameter must be finite"));
        }
        let deepest = v.level().max(w.level());
        if deepest > MAX_LEVEL {
            return Err(ArborError::pre(format!(
                "function level {deepest} exceeds the supported maximum {MAX_LEVEL}"
            )));
        }
        Ok(CoeffPlan {
            ctx,
            n,
            v,
            w,
            factors: (0..=n).map(|c| radial_factor(ctx, t, c, n)).collect(),
            strata: stratum_mass_table(ctx, n),
            cylinders: cylinder_mass_table(ctx, n + deepest),
        })
    }

    /// The coefficient at `gamma`, which must have the planned length.
    pub fn eval(&self, gamma: &[Letter]) -> Complex64 {
        let ctx = self.ctx;
        let n = self.n;
        assert_eq!(gamma.len(), n, "plan serves words of length {n}");
        let kv = self.v.level();
        let kw = self.w.level();
        let vv = self.v.values();
        let wv = self.w.values();

        // Ranks of the two prefixes on strata where gamma pins them both:
        // the inverted gamma-tail for v, the gamma-head for w.
        let mut buf = [0 as Letter; MAX_LEVEL];
        let pv_pinned = (n >= kv).then(|| {
            for (j, b) in buf.iter_mut().enumerate().take(kv) {
                *b = ctx.involute(gamma[n - 1 - j]);
            }
            sphere_rank(ctx, &buf[..kv])
        });
        let pw_pinned = (n >= kw).then(|| sphere_rank(ctx, &gamma[..kw]));

        let mut acc = NeumaierComplex::new();
        let mut bv = [0 as Letter; MAX_LEVEL];
        let mut bw = [0 as Letter; MAX_LEVEL];
        for c in 0..=n {
            let tail = n - c;
            if tail >= kv && c >= kw {
                let term = (vv[pv_pinned.unwrap()] * wv[pw_pinned.unwrap()].conj())
                    * self.strata[c]
                    * self.factors[c];
                acc.add(term);
                continue;
            }
            // Letters past the branch point needed to pin both prefixes.
            let g = kv.saturating_sub(tail).max(kw.saturating_sub(c));
            let forbid_back = (c >= 1).then(|| ctx.involute(gamma[c - 1]));
            let forbid_on = (c < n).then(|| gamma[c]);
            let mass = self.cylinders[c + g] * self.factors[c];
            for_each_tail(ctx, forbid_back, forbid_on, g, |s| {
                for (j, b) in bv.iter_mut().enumerate().take(kv) {
                    *b = if j < tail { ctx.involute(gamma[n - 1 - j]) } else { s[j - tail] };
                }
                for (j, b) in bw.iter_mut().enumerate().take(kw) {
                    *b = if j < c { gamma[j] } else { s[j - c] };
                }
                let term = (vv[sphere_rank(ctx, &bv[..kv])]
                    * wv[sphere_rank(ctx, &bw[..kw])].conj())
                    * mass;
                acc.add(term);
            });
        }
        acc.value()
    }
}

/// Enumerates, in lexicographic order, the reduced length-`g` continuations
/// whose first letter avoids the two given obstructions.
fn for_each_tail(
    ctx: &GroupContext,
    forbid_back: Option<Letter>,
    forbid_on: Option<Letter>,
    g: usize,
    mut f: impl FnMut(&[Letter]),
) {
    if g == 0 {
        f(&[]);
        return;
    }
    let q = ctx.alphabet_size() as Letter;
    let bad = |p: usize, i: Letter, s: &[Letter]| {
        if p == 0 {
            Some(i) == forbid_back || Some(i) == forbid_on
        } else {
            i == ctx.involute(s[p - 1])
        }
    };
    let first_good = |p: usize, from: Letter, s: &[Letter]| -> Option<Letter> {
        (from..q).find(|&i| !bad(p, i, s))
    };
    let mut s = vec![0 as Letter; g];
    for p in 0..g {
        match first_good(p, 0, &s) {
            Some(i) => s[p] = i,
            None => return,
        }
    }
    loop {
        f(&s);
        let mut pos = g;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if let Some(i) = first_good(pos, s[pos] + 1, &s) {
                s[pos] = i;
                break;
            }
        }
        for p in pos + 1..g {
            s[p] = first_good(p, 0, &s).expect("a reduced continuation always exists");
        }
    }
}

/// `<pi_t(gamma) v, w>` by the grouped stratum sum.
pub fn matrix_coefficient(
    ctx: &GroupContext,
    t: f64,
    gamma: &ReducedWord,
    v: &CylinderFunction,
    w: &CylinderFunction,
) -> Result<Complex64> {
    Ok(CoeffPlan::new(ctx, t, gamma.len(), v, w)?.eval(gamma.letters()))
}

/// Pointwise reference for the grouped sum: move the function, refine, and
/// pair. Exponential in `|gamma| + level`; kept as the test oracle.
pub fn matrix_coefficient_naive(
    ctx: &GroupContext,
    t: f64,
    gamma: &ReducedWord,
    v: &CylinderFunction,
    w: &CylinderFunction,
) -> Result<Complex64> {
    let moved = apply_pi(ctx, t, gamma, v)?;
    Ok(l2_inner(ctx, &moved, w))
}

/// Exact rational stratum masses for `|gamma| = n`; the table underlying
/// `stratum_mass_table`, exposed for callers that pair them with exact data.
pub fn stratum_mass_exact(ctx: &GroupContext, c: usize, n: usize) -> BigRational {
    if c == n {
        level_measure(ctx, n)
    } else {
        level_measure(ctx, c) - level_measure(ctx, c + 1)
    }
}
