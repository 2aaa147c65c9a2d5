//! Sphere equidistribution toward the square of the boundary measure.
//!
//! The sphere average of `f(gamma o) g(gamma^{-1} o)` converges to the
//! product of the boundary integrals of `f` and `g`. The orbit mode
//! evaluates the test functions at the orbit points themselves; the
//! boundary mode evaluates at the boundary points obtained by extending
//! each word to a geodesic ray.

use crate::context::GroupContext;
use crate::cylfn::TreeTestFunction;
use crate::error::Result;
use crate::word::Letter;

use super::report::{ExperimentParams, ExperimentReport, ExperimentRow};
use super::{inverse_letters, sphere_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquiMode {
    /// Evaluate at the orbit points `gamma o` and `gamma^{-1} o`.
    Orbit,
    /// Evaluate the boundary parts at the ray extensions of the words.
    Boundary,
}

/// Writes the level-`k` prefix of the ray that follows `gamma` and then
/// repeats its last letter. Repeating the last letter never cancels, so
/// this is the canonical geodesic extension of the word.
fn ray_prefix(gamma: &[Letter], k: usize, buf: &mut Vec<Letter>) {
    buf.clear();
    let last = *gamma.last().expect("ray extension needs a nonempty word");
    for i in 0..k {
        buf.push(if i < gamma.len() { gamma[i] } else { last });
    }
}

/// Sphere averages of `f(gamma o) g(gamma^{-1} o)` against the exact limit
/// `nu(f) nu(g)`. Rows with indicator-built test functions come out with
/// exactly zero error: the average is a ratio of exact integer counts and
/// the limit is the same dyadic rational.
pub fn equi_experiment(
    ctx: &GroupContext,
    f: &TreeTestFunction,
    g: &TreeTestFunction,
    n_max: usize,
    mode: EquiMode,
    tol: f64,
) -> Result<ExperimentReport> {
    let rhs_exact = f
        .boundary()
        .integral_exact(ctx)
        .mul(&g.boundary().integral_exact(ctx));
    let rhs = rhs_exact.to_complex64();

    let kf = f.level();
    let kg = g.level();
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let lhs = match mode {
            EquiMode::Orbit => sphere_sum(ctx, n, |gamma| {
                let mut inv = Vec::with_capacity(n);
                inverse_letters(ctx, gamma, &mut inv);
                f.eval_letters(ctx, gamma) * g.eval_letters(ctx, &inv)
            })?,
            EquiMode::Boundary => sphere_sum(ctx, n, |gamma| {
                let mut buf = Vec::with_capacity(kf.max(kg));
                ray_prefix(gamma, kf, &mut buf);
                let fv = f.boundary().eval_prefix(ctx, &buf);
                let mut inv = Vec::with_capacity(n);
                inverse_letters(ctx, gamma, &mut inv);
                ray_prefix(&inv, kg, &mut buf);
                fv * g.boundary().eval_prefix(ctx, &buf)
            })?,
        };
        let size = ctx.sphere_size(n) as f64;
        rows.push(ExperimentRow::new(n, lhs / size, rhs));
    }

    let id = match mode {
        EquiMode::Orbit => "equi-orbit",
        EquiMode::Boundary => "equi-boundary",
    };
    let params = ExperimentParams {
        levels: vec![kf, kg],
        ..ExperimentParams::new(ctx.rank(), ctx.epsilon(), 1, n_max, tol)
    };
    Ok(ExperimentReport::new(id, params, rows))
}
