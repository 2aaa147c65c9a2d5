//! Asymptotic orthogonality of matrix coefficients across two spectral
//! parameters.
//!
//! The sphere average of a product of two singly normalized coefficients,
//! weighted by orbit test functions, converges to the product of two
//! boundary integrals: the Riesz averages of the first arguments paired
//! against `g`, and the smoothed second arguments paired against `f`. Both
//! limit factors are computed at two consecutive averaging levels and must
//! agree within a fixed tolerance; kernel averages of locally constant
//! functions are exactly locally constant, so the refinement stabilizes at
//! once and the check guards that invariant.

use num_complex::Complex64;

use crate::coeff::CoeffPlan;
use crate::context::GroupContext;
use crate::cylfn::{l2_inner, CylinderFunction, TreeTestFunction};
use crate::error::{ArborError, Result};
use crate::kernel::riesz_boundary_avg;
use crate::spherical::phi;
use crate::tolerances::{PAIRING_GUARD_C, SCHUR_RHS_TOL};

use super::bml::pairing_name;
use super::report::{ExperimentParams, ExperimentReport, ExperimentRow};
use super::{intertwined_coeff_args, inverse_letters, pairing_norm, sphere_sum, sup_abs};

/// `i`-fold kernel average of `a`, conditioned at `level`. Zero applications
/// is the conditional expectation itself, which is exact for `level` at or
/// above the level of `a`.
fn smooth_pow_at(
    ctx: &GroupContext,
    t: f64,
    a: &CylinderFunction,
    times: u8,
    level: usize,
) -> Result<CylinderFunction> {
    let s = crate::kernel::sigma(ctx, t)?;
    let mut out = a.refine(ctx, level.max(a.level()))?;
    for _ in 0..times {
        out = riesz_boundary_avg(ctx, t, &out, out.level())?.scale(Complex64::new(s, 0.0));
    }
    Ok(out)
}

/// `<g Riesz_t(v), Riesz_t'(v')>` at averaging level `level`.
fn riesz_pairing_at(
    ctx: &GroupContext,
    t: f64,
    t_prime: f64,
    v: &CylinderFunction,
    v_prime: &CylinderFunction,
    g_bd: &CylinderFunction,
    level: usize,
) -> Result<Complex64> {
    let rv = riesz_boundary_avg(ctx, t, v, level.max(v.level()))?;
    let rvp = riesz_boundary_avg(ctx, t_prime, v_prime, level.max(v_prime.level()))?;
    let weighted = rv.pointwise_mul(ctx, g_bd)?;
    Ok(l2_inner(ctx, &weighted, &rvp))
}

/// `<I_t^i w, f . I_t'^j w'>` with the averages conditioned `bump` levels
/// deeper than the arguments.
fn smoothed_pairing_at(
    ctx: &GroupContext,
    t: f64,
    t_prime: f64,
    i: u8,
    j: u8,
    w: &CylinderFunction,
    w_prime: &CylinderFunction,
    f_bd: &CylinderFunction,
    bump: usize,
) -> Result<Complex64> {
    let iw = smooth_pow_at(ctx, t, w, i, w.level() + bump)?;
    let iwp = smooth_pow_at(ctx, t_prime, w_prime, j, w_prime.level() + bump)?;
    let prod = iwp.pointwise_mul(ctx, f_bd)?;
    Ok(l2_inner(ctx, &iw, &prod))
}

/// Computes `fine` and checks it against `coarse` within the frozen limit
/// tolerance, failing with a convergence error otherwise.
fn settled(coarse: Complex64, fine: Complex64) -> Result<Complex64> {
    if (fine - coarse).norm() > SCHUR_RHS_TOL * (1.0 + fine.norm()) {
        return Err(ArborError::NoConvergence {
            steps: 1,
            previous: coarse.norm(),
            last: fine.norm(),
            tol: SCHUR_RHS_TOL,
        });
    }
    Ok(fine)
}

/// Sphere averages of doubly normalized coefficient products. Every row also
/// verifies the uniform-boundedness guard: the average, normalized by the
/// pairing norms of the four arguments and the sup norms of the two test
/// functions, must stay under the calibrated constant.
#[allow(clippy::too_many_arguments)]
pub fn schur_experiment(
    ctx: &GroupContext,
    t: f64,
    t_prime: f64,
    i: u8,
    j: u8,
    v: &CylinderFunction,
    w: &CylinderFunction,
    v_prime: &CylinderFunction,
    w_prime: &CylinderFunction,
    f: &TreeTestFunction,
    g: &TreeTestFunction,
    n_max: usize,
    tol: f64,
) -> Result<ExperimentReport> {
    for s in [t, t_prime] {
        if !(s > 0.0) {
            return Err(ArborError::Domain {
                param: s,
                what: "the normalized coefficient averages need both parameters > 0".into(),
            });
        }
    }
    let (te1, a1, b1) = intertwined_coeff_args(ctx, t, i, v, w)?;
    let (te2, a2, b2) = intertwined_coeff_args(ctx, t_prime, j, v_prime, w_prime)?;

    let base = v.level().max(v_prime.level()).max(g.level()).max(1);
    let first = settled(
        riesz_pairing_at(ctx, t, t_prime, v, v_prime, g.boundary(), base)?,
        riesz_pairing_at(ctx, t, t_prime, v, v_prime, g.boundary(), base + 1)?,
    )?;
    let second = settled(
        smoothed_pairing_at(ctx, t, t_prime, i, j, w, w_prime, f.boundary(), 0)?,
        smoothed_pairing_at(ctx, t, t_prime, i, j, w, w_prime, f.boundary(), 1)?,
    )?;
    let rhs = first * second.conj();

    let guard_scale = pairing_norm(ctx, t, i, v)?
        * pairing_norm(ctx, t, i, w)?
        * pairing_norm(ctx, t_prime, j, v_prime)?
        * pairing_norm(ctx, t_prime, j, w_prime)?
        * sup_abs(f)
        * sup_abs(g);

    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let plan1 = CoeffPlan::new(ctx, te1, n, &a1, &b1)?;
        let plan2 = CoeffPlan::new(ctx, te2, n, &a2, &b2)?;
        let norm1 = phi(ctx, t, n);
        let norm2 = phi(ctx, t_prime, n);
        let total = sphere_sum(ctx, n, |gamma| {
            let c1 = plan1.eval(gamma) / norm1;
            let c2 = plan2.eval(gamma) / norm2;
            let mut inv = Vec::with_capacity(n);
            inverse_letters(ctx, gamma, &mut inv);
            c1 * c2.conj() * f.eval_letters(ctx, gamma) * g.eval_letters(ctx, &inv)
        })?;
        let lhs = total / ctx.sphere_size(n) as f64;
        if guard_scale > 0.0 && lhs.norm() > PAIRING_GUARD_C * guard_scale {
            return Err(ArborError::pre(format!(
                "uniform boundedness guard tripped at n={n}: |average| {} exceeds {} x {}",
                lhs.norm(),
                PAIRING_GUARD_C,
                guard_scale
            )));
        }
        rows.push(ExperimentRow::new(n, lhs, rhs));
    }

    let params = ExperimentParams {
        t: Some(t),
        t_prime: Some(t_prime),
        i: Some(i),
        j: Some(j),
        levels: vec![
            v.level(),
            w.level(),
            v_prime.level(),
            w_prime.level(),
            f.level(),
            g.level(),
        ],
        ..ExperimentParams::new(ctx.rank(), ctx.epsilon(), 1, n_max, tol)
    };
    Ok(ExperimentReport::new(
        format!("schur-{}-{}", pairing_name(i), pairing_name(j)),
        params,
        rows,
    ))
}

/// The ratio the guard compares against its constant, exposed so the
/// calibration run can report the worst value it sees.
pub fn guard_ratio(report: &ExperimentReport, guard_scale: f64) -> f64 {
    report
        .rows
        .iter()
        .map(|r| Complex64::new(r.lhs_re, r.lhs_im).norm())
        .fold(0.0, f64::max)
        / guard_scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::bml_experiment;
    use crate::kernel::{kt_inner, sigma};
    use crate::tolerances::KT_TOL;
    use crate::word::ReducedWord;

    fn ctx2() -> GroupContext {
        GroupContext::with_rank(2).unwrap()
    }

    fn indicator(ctx: &GroupContext, s: &str) -> CylinderFunction {
        CylinderFunction::indicator(ctx, &ReducedWord::parse(ctx, s).unwrap()).unwrap()
    }

    fn ones() -> (CylinderFunction, TreeTestFunction) {
        (CylinderFunction::one(), TreeTestFunction::one())
    }

    #[test]
    fn trivial_rows_are_exactly_zero_error() {
        let ctx = ctx2();
        let (one, ext) = ones();
        let report = schur_experiment(
            &ctx, 0.25, 0.25, 0, 0, &one, &one, &one, &one, &ext, &ext, 6, 0.05,
        )
        .unwrap();
        assert!(report.pass());
        for row in &report.rows {
            assert_eq!(row.lhs_re, 1.0, "n={}", row.n);
            assert_eq!(row.lhs_im, 0.0);
            assert_eq!(row.rhs_re, 1.0);
            assert_eq!(row.rhs_im, 0.0);
            assert_eq!(row.abs_err, 0.0);
        }
    }

    #[test]
    fn riesz_factor_matches_the_smoothed_inner_product() {
        let ctx = ctx2();
        let v = indicator(&ctx, "a");
        let (one, ext) = ones();
        let report = schur_experiment(
            &ctx, 0.25, 0.25, 0, 0, &v, &one, &v, &one, &ext, &ext, 9, 0.2,
        )
        .unwrap();
        let s = sigma(&ctx, 0.25).unwrap();
        let expect = kt_inner(&ctx, 0.25, &v, &v, KT_TOL).unwrap() / (s * s);
        let rhs = Complex64::new(report.rows[0].rhs_re, report.rows[0].rhs_im);
        assert!((rhs - expect).norm() < 1e-10, "rhs {rhs} vs {expect}");
        let errs: Vec<f64> = report.rows.iter().map(|r| r.rel_err).collect();
        assert!(errs.last().unwrap() < &errs[2], "errs {errs:?}");
    }

    #[test]
    fn reduces_to_the_single_coefficient_experiment() {
        let ctx = ctx2();
        let v = indicator(&ctx, "a");
        let w = indicator(&ctx, "b");
        let f = TreeTestFunction::from_boundary(&ctx, indicator(&ctx, "aB"));
        let (one, ext) = ones();
        for i in [0u8, 1, 2] {
            let single = bml_experiment(&ctx, 0.25, i, &v, &w, &f, &ext, 7, 0.5).unwrap();
            let double = schur_experiment(
                &ctx, 0.25, 0.25, i, 0, &v, &w, &one, &one, &f, &ext, 7, 0.5,
            )
            .unwrap();
            for (a, b) in single.rows.iter().zip(&double.rows) {
                assert_eq!(a.lhs_re, b.lhs_re, "i={i} n={}", a.n);
                assert_eq!(a.lhs_im, b.lhs_im, "i={i} n={}", a.n);
            }
            let ra = Complex64::new(single.rows[0].rhs_re, single.rows[0].rhs_im);
            let rb = Complex64::new(double.rows[0].rhs_re, double.rows[0].rhs_im);
            assert!((ra - rb).norm() < 1e-6, "i={i}: {ra} vs {rb}");
        }
    }

    #[test]
    fn cross_temperature_runs_and_trends_down() {
        let ctx = ctx2();
        let v = indicator(&ctx, "a");
        let (one, ext) = ones();
        let report = schur_experiment(
            &ctx, 0.2, 0.4, 0, 0, &v, &one, &v, &one, &ext, &ext, 9, 0.3,
        )
        .unwrap();
        let errs: Vec<f64> = report.rows.iter().map(|r| r.rel_err).collect();
        assert!(errs.iter().all(|e| e.is_finite()));
        assert!(errs.last().unwrap() < &errs[1], "errs {errs:?}");
    }

    #[test]
    fn mixed_pairings_run_within_the_guard() {
        let ctx = ctx2();
        let v = indicator(&ctx, "a");
        let w = indicator(&ctx, "b");
        let (_, ext) = ones();
        let report = schur_experiment(
            &ctx, 0.25, 0.25, 1, 2, &v, &w, &v, &w, &ext, &ext, 6, 1.0,
        )
        .unwrap();
        assert_eq!(report.id, "schur-ht-kt");
        for row in &report.rows {
            assert!(row.abs_err.is_finite());
        }
    }

    #[test]
    fn zero_direction_gives_zero_rows() {
        let ctx = ctx2();
        let zero = CylinderFunction::constant(Complex64::ZERO);
        let (one, ext) = ones();
        let report = schur_experiment(
            &ctx, 0.25, 0.25, 0, 0, &zero, &one, &one, &one, &ext, &ext, 4, 0.05,
        )
        .unwrap();
        for row in &report.rows {
            assert_eq!(row.lhs_re, 0.0);
            assert_eq!(row.abs_err, 0.0);
        }
    }

    #[test]
    fn domain_gates() {
        let ctx = ctx2();
        let (one, ext) = ones();
        assert!(matches!(
            schur_experiment(&ctx, 0.0, 0.25, 0, 0, &one, &one, &one, &one, &ext, &ext, 3, 0.05),
            Err(ArborError::Domain { .. })
        ));
        assert!(matches!(
            schur_experiment(&ctx, 0.25, 0.75, 0, 1, &one, &one, &one, &one, &ext, &ext, 3, 0.05),
            Err(ArborError::Domain { .. })
        ));
        assert!(
            schur_experiment(&ctx, 0.25, 0.25, 0, 5, &one, &one, &one, &one, &ext, &ext, 3, 0.05)
                .is_err()
        );
    }
}
