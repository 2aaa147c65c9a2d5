//! Sphere averages of normalized matrix coefficients against orbit test
//! functions, for each of the three boundary pairings.
//!
//! The average of `f(gamma o) g(gamma^{-1} o) <pi_t(gamma) v, w> / phi_t(n)`
//! over the radius-`n` sphere converges to a product of two boundary
//! integrals: the Riesz average of `v` paired against `g`, and `w` paired
//! against `f` in the selected inner product. The normalizer is the
//! parameter-`t` spherical function for every pairing; the smoothed pairings
//! are folded into plain coefficients by moving kernel averages onto the
//! arguments and flipping the parameter sign.

use crate::coeff::CoeffPlan;
use crate::context::GroupContext;
use crate::cylfn::{l2_inner, CylinderFunction, TreeTestFunction};
use crate::error::{ArborError, Result};
use crate::kernel::{ht_inner, kernel_form, kt_inner, sigma};
use crate::spherical::phi;
use crate::tolerances::KT_TOL;

use super::report::{ExperimentParams, ExperimentReport, ExperimentRow};
use super::{intertwined_coeff_args, inverse_letters, sphere_sum};

/// Index-to-name map shared by the report ids.
pub(crate) fn pairing_name(i: u8) -> &'static str {
    match i {
        0 => "l2",
        1 => "ht",
        _ => "kt",
    }
}

/// Sphere averages of singly normalized coefficients. Pairing index 0 is the
/// boundary inner product, 1 the kernel form, 2 the smoothed-range product.
/// Coefficients are divided by the spherical normalizer term by term, so the
/// all-ones rows are integer counts divided by integer counts: exactly 1.
pub fn bml_experiment(
    ctx: &GroupContext,
    t: f64,
    i: u8,
    v: &CylinderFunction,
    w: &CylinderFunction,
    f: &TreeTestFunction,
    g: &TreeTestFunction,
    n_max: usize,
    tol: f64,
) -> Result<ExperimentReport> {
    if !(t > 0.0) {
        return Err(ArborError::Domain {
            param: t,
            what: "the normalized coefficient averages need t > 0".into(),
        });
    }
    let s = sigma(ctx, t)?;
    let (t_eff, a, b) = intertwined_coeff_args(ctx, t, i, v, w)?;

    // <g Riesz(v), 1> through the exact stratified form, then w against f
    // in the pairing the coefficients were taken in.
    let first = kernel_form(ctx, t, v, &g.boundary().conj())? / s;
    let second = match i {
        0 => l2_inner(ctx, w, f.boundary()),
        1 => ht_inner(ctx, t, w, f.boundary())?,
        _ => kt_inner(ctx, t, w, f.boundary(), KT_TOL)?,
    };
    let rhs = first * second.conj();

    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let plan = CoeffPlan::new(ctx, t_eff, n, &a, &b)?;
        let norm = phi(ctx, t, n);
        let total = sphere_sum(ctx, n, |gamma| {
            let coeff = plan.eval(gamma) / norm;
            let mut inv = Vec::with_capacity(n);
            inverse_letters(ctx, gamma, &mut inv);
            coeff * f.eval_letters(ctx, gamma) * g.eval_letters(ctx, &inv)
        })?;
        let lhs = total / ctx.sphere_size(n) as f64;
        rows.push(ExperimentRow::new(n, lhs, rhs));
    }

    let params = ExperimentParams {
        t: Some(t),
        i: Some(i),
        levels: vec![v.level(), w.level(), f.level(), g.level()],
        ..ExperimentParams::new(ctx.rank(), ctx.epsilon(), 1, n_max, tol)
    };
    Ok(ExperimentReport::new(format!("bml-{}", pairing_name(i)), params, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::ReducedWord;
    use num_complex::Complex64;

    fn ctx2() -> GroupContext {
        GroupContext::with_rank(2).unwrap()
    }

    fn indicator(ctx: &GroupContext, s: &str) -> CylinderFunction {
        CylinderFunction::indicator(ctx, &ReducedWord::parse(ctx, s).unwrap()).unwrap()
    }

    #[test]
    fn all_ones_rows_are_exactly_one() {
        let ctx = ctx2();
        let one = CylinderFunction::one();
        let ext = TreeTestFunction::one();
        let report =
            bml_experiment(&ctx, 0.25, 0, &one, &one, &ext, &ext, 8, 0.05).unwrap();
        assert!(report.pass());
        for row in &report.rows {
            assert_eq!(row.lhs_re, 1.0, "n={}", row.n);
            assert_eq!(row.lhs_im, 0.0);
            assert_eq!(row.rhs_re, 1.0);
            assert_eq!(row.abs_err, 0.0);
        }
    }

    #[test]
    fn smoothed_pairings_stay_within_roundoff_on_the_ones_row() {
        let ctx = ctx2();
        let one = CylinderFunction::one();
        let ext = TreeTestFunction::one();
        for i in [1u8, 2] {
            let report =
                bml_experiment(&ctx, 0.25, i, &one, &one, &ext, &ext, 5, 0.05).unwrap();
            assert!(report.pass(), "i={i}");
            for row in &report.rows {
                assert!(row.rel_err < 1e-12, "i={i} n={} err={}", row.n, row.rel_err);
            }
        }
    }

    #[test]
    fn indicator_against_ones_recovers_its_mass() {
        let ctx = ctx2();
        let v = indicator(&ctx, "a");
        let one = CylinderFunction::one();
        let ext = TreeTestFunction::one();
        let report = bml_experiment(&ctx, 0.25, 0, &v, &one, &ext, &ext, 9, 0.05).unwrap();
        assert!((report.rows[0].rhs_re - 0.25).abs() < 1e-12);
        assert_eq!(report.rows[0].rhs_im, 0.0);
        assert!(report.pass(), "rows {:?}", report.rows);
    }

    #[test]
    fn trivial_direction_reproduces_the_boundary_pairing() {
        let ctx = ctx2();
        let one = CylinderFunction::one();
        let w = indicator(&ctx, "b");
        let fb = indicator(&ctx, "ba").scale(Complex64::new(2.0, 1.0));
        let f = TreeTestFunction::from_boundary(&ctx, fb.clone());
        let ext = TreeTestFunction::one();
        let report = bml_experiment(&ctx, 0.25, 0, &one, &w, &f, &ext, 9, 0.05).unwrap();
        let expect = l2_inner(&ctx, &w, &fb).conj();
        let rhs = Complex64::new(report.rows[0].rhs_re, report.rows[0].rhs_im);
        assert!((rhs - expect).norm() < 1e-12);
        assert!(report.pass(), "rows {:?}", report.rows);
    }

    #[test]
    fn smoothed_pairing_converges_on_indicators() {
        let ctx = ctx2();
        let v = indicator(&ctx, "a");
        let w = indicator(&ctx, "b");
        let f = TreeTestFunction::from_boundary(&ctx, indicator(&ctx, "b"));
        let ext = TreeTestFunction::one();
        for i in [1u8, 2] {
            let report = bml_experiment(&ctx, 0.25, i, &v, &w, &f, &ext, 9, 0.1).unwrap();
            assert!(report.pass(), "i={i} rows {:?}", report.rows);
        }
    }

    #[test]
    fn domain_gates() {
        let ctx = ctx2();
        let one = CylinderFunction::one();
        let ext = TreeTestFunction::one();
        assert!(matches!(
            bml_experiment(&ctx, 0.0, 0, &one, &one, &ext, &ext, 3, 0.05),
            Err(ArborError::Domain { .. })
        ));
        assert!(matches!(
            bml_experiment(&ctx, 0.75, 1, &one, &one, &ext, &ext, 3, 0.05),
            Err(ArborError::Domain { .. })
        ));
        assert!(bml_experiment(&ctx, 0.75, 0, &one, &one, &ext, &ext, 3, 0.05).is_ok());
        assert!(bml_experiment(&ctx, 0.25, 3, &one, &one, &ext, &ext, 3, 0.05).is_err());
    }
}
