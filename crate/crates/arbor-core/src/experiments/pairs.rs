//! Equidistribution of kernel-weighted pair averages over product spheres.
//!
//! For `t < 1/2` the normalized double sphere sum of
//! `F(g o, h o) e^{(1-2t) Q <g,h>}` converges to the integral of `F` against
//! the boundary kernel. Pair functions that depend only on the Gromov
//! product admit an exact closed-form row via the pair-count strata; general
//! product test functions take the parallel double loop.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use crate::context::GroupContext;
use crate::cylfn::TreeTestFunction;
use crate::error::{ArborError, Result};
use crate::kernel::{kernel_form, kernel_weight, sigma_truncated_above};
use crate::measure::{annulus_profile, pair_count_sphere, rat_to_f64, ProfileTarget};
use crate::sum::{par_chunked, Neumaier, NeumaierComplex};
use crate::word::{common_prefix, Letter, SphereCursor};

use super::report::{ExperimentParams, ExperimentReport, ExperimentRow};

/// Pairs enumerated by the double loop are capped separately from the
/// single-sphere budget; the loop is O(1) per pair.
const PAIR_ENUM_BUDGET: u128 = 800_000_000;

/// The pair test function integrated against the kernel measure.
pub enum PairTest<'a> {
    /// Depends only on the Gromov product: value `values[m]` at product `m`,
    /// `tail` from `values.len()` on. Rows cost O(n) via exact pair counts.
    Radial { values: Vec<f64>, tail: f64 },
    /// `F(x, y) = f(x) conj(g(y))`, evaluated by the double loop.
    Product { f: &'a TreeTestFunction, g: &'a TreeTestFunction },
}

impl PairTest<'_> {
    /// The constant pair function.
    pub fn one() -> PairTest<'static> {
        PairTest::Radial { values: Vec::new(), tail: 1.0 }
    }
}

fn radial_value(values: &[f64], tail: f64, m: usize) -> f64 {
    if m < values.len() {
        values[m]
    } else {
        tail
    }
}

/// Exact limit of the radial case: strata masses times kernel weights, the
/// tail stratum in closed geometric form.
fn radial_limit(ctx: &GroupContext, t: f64, values: &[f64], tail: f64) -> Result<f64> {
    let mut acc = Neumaier::new();
    for (m, &fm) in values.iter().enumerate() {
        let mass = annulus_profile(ctx, ProfileTarget::Boundary, m)?;
        acc.add(rat_to_f64(&mass) * fm * kernel_weight(ctx, t, m));
    }
    acc.add(tail * sigma_truncated_above(ctx, t, values.len() as f64)?);
    Ok(acc.value())
}

/// Double sphere averages of the kernel-weighted pair function against the
/// exact kernel integral.
pub fn pair_kernel_experiment(
    ctx: &GroupContext,
    t: f64,
    pair: &PairTest,
    n_max: usize,
    tol: f64,
) -> Result<ExperimentReport> {
    if t >= 0.5 {
        return Err(ArborError::Domain {
            param: t,
            what: "the limit pair measure has no finite normalization for t >= 1/2".into(),
        });
    }

    let (id, levels, rhs) = match pair {
        PairTest::Radial { values, tail } => (
            "pairs-radial",
            Vec::new(),
            Complex64::new(radial_limit(ctx, t, values, *tail)?, 0.0),
        ),
        PairTest::Product { f, g } => (
            "pairs-product",
            vec![f.level(), g.level()],
            kernel_form(ctx, t, f.boundary(), g.boundary())?,
        ),
    };

    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let lhs = match pair {
            PairTest::Radial { values, tail } => {
                let sphere = ctx.sphere_size(n);
                let total = BigInt::from(sphere) * BigInt::from(sphere);
                let mut acc = Neumaier::new();
                for m in 0..=n {
                    let count = pair_count_sphere(ctx, n, m)?;
                    let frac = BigRational::new(BigInt::from(count), total.clone());
                    acc.add(
                        rat_to_f64(&frac)
                            * radial_value(values, *tail, m)
                            * kernel_weight(ctx, t, m),
                    );
                }
                Complex64::new(acc.value(), 0.0)
            }
            PairTest::Product { f, g } => double_loop(ctx, t, f, g, n)?,
        };
        rows.push(ExperimentRow::new(n, lhs, rhs));
    }

    let params = ExperimentParams {
        t: Some(t),
        levels,
        ..ExperimentParams::new(ctx.rank(), ctx.epsilon(), 1, n_max, tol)
    };
    Ok(ExperimentReport::new(id, params, rows))
}

/// `|S_n|^{-2} sum_{g,h} f(g o) conj(g_fn(h o)) W(<g,h>)` by enumeration of
/// both spheres. The inner sphere is tabulated once; the outer sphere is
/// chunked in rank order for a deterministic parallel reduction.
fn double_loop(
    ctx: &GroupContext,
    t: f64,
    f: &TreeTestFunction,
    g: &TreeTestFunction,
    n: usize,
) -> Result<Complex64> {
    let sphere = ctx.sphere_size(n);
    if sphere * sphere > PAIR_ENUM_BUDGET {
        return Err(ArborError::Budget {
            requested: sphere * sphere,
            budget: PAIR_ENUM_BUDGET,
        });
    }
    let size = sphere as usize;

    let mut inner_letters: Vec<Letter> = Vec::with_capacity(size * n);
    let mut inner_values: Vec<Complex64> = Vec::with_capacity(size);
    let mut cursor = SphereCursor::new(ctx, n);
    for _ in 0..size {
        let word = cursor.current();
        inner_letters.extend_from_slice(word);
        inner_values.push(g.eval_letters(ctx, word).conj());
        cursor.advance();
    }
    let weights: Vec<f64> = (0..=n).map(|m| kernel_weight(ctx, t, m)).collect();

    let partials = par_chunked(size, |range| {
        let mut outer = SphereCursor::at_rank(ctx, n, range.start);
        let mut acc = NeumaierComplex::new();
        for _ in range {
            let gw = outer.current();
            let fv = f.eval_letters(ctx, gw);
            let mut row = NeumaierComplex::new();
            for (h, gv) in inner_values.iter().enumerate() {
                let hw = &inner_letters[h * n..(h + 1) * n];
                let m = common_prefix(gw, hw);
                row.add(gv * weights[m]);
            }
            acc.add(fv * row.value());
            outer.advance();
        }
        acc.value()
    });
    let mut total = NeumaierComplex::new();
    for p in partials {
        total.add(p);
    }
    Ok(total.value() / (sphere as f64 * sphere as f64))
}
