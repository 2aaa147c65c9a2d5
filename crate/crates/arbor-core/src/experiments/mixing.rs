//! Witnesses for the decay of paired matrix coefficients along spheres.
//!
//! For `|t| < 1/2` the product `<pi_t(gamma) v, w> <pi_{-t}(gamma) v', w'>`
//! drops below any positive threshold at some group element. The probe
//! scans whole spheres, records the minimum modulus per radius together
//! with the word achieving it, and reports the first word anywhere that
//! beats the threshold.

use serde::Serialize;

use crate::coeff::CoeffPlan;
use crate::context::GroupContext;
use crate::cylfn::CylinderFunction;
use crate::error::{ArborError, Result};
use crate::sum::par_chunked;
use crate::word::{SphereCursor, DEFAULT_ENUM_BUDGET};

use super::report::REPORT_SCHEMA;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakMixingRow {
    pub n: usize,
    /// Smallest modulus of the coefficient product over the sphere.
    pub min_product: f64,
    /// First word attaining the minimum, in enumeration order.
    pub argmin: String,
    pub below_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakMixingTable {
    pub schema: u32,
    pub id: String,
    pub r: usize,
    pub t: f64,
    /// The decay threshold the probe hunts for.
    pub threshold: f64,
    pub rows: Vec<WeakMixingRow>,
    /// First word, scanning radii outward, whose product modulus is under
    /// the threshold.
    pub first_witness: Option<String>,
    pub verdict: String,
}

impl WeakMixingTable {
    pub fn pass(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,min_product,argmin,below_threshold\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.n, row.min_product, row.argmin, row.below_threshold
            ));
        }
        out
    }
}

/// Scans spheres of increasing radius for decay of the paired coefficient
/// product. Passing means a witness under the threshold exists and the
/// per-radius minimum did not grow from the first row to the last.
#[allow(clippy::too_many_arguments)]
pub fn weak_mixing_probe(
    ctx: &GroupContext,
    t: f64,
    v: &CylinderFunction,
    w: &CylinderFunction,
    v_prime: &CylinderFunction,
    w_prime: &CylinderFunction,
    n_max: usize,
    threshold: f64,
) -> Result<WeakMixingTable> {
    if !(t.abs() < 0.5) {
        return Err(ArborError::Domain {
            param: t,
            what: "coefficient decay of this kind holds only for |t| < 1/2".into(),
        });
    }
    if !(threshold > 0.0) {
        return Err(ArborError::pre("decay threshold must be positive"));
    }

    let mut rows = Vec::with_capacity(n_max + 1);
    let mut first_witness: Option<String> = None;
    for n in 0..=n_max {
        let size = ctx.sphere_size(n);
        if size > DEFAULT_ENUM_BUDGET {
            return Err(ArborError::Budget { requested: size, budget: DEFAULT_ENUM_BUDGET });
        }
        let plan1 = CoeffPlan::new(ctx, t, n, v, w)?;
        let plan2 = CoeffPlan::new(ctx, -t, n, v_prime, w_prime)?;
        let chunks = par_chunked(size as usize, |range| {
            let mut cursor = SphereCursor::at_rank(ctx, n, range.start);
            let mut min = f64::INFINITY;
            let mut argmin = range.start;
            let mut below: Option<usize> = None;
            for rank in range {
                let p = (plan1.eval(cursor.current()) * plan2.eval(cursor.current())).norm();
                if p < min {
                    min = p;
                    argmin = rank;
                }
                if below.is_none() && p < threshold {
                    below = Some(rank);
                }
                cursor.advance();
            }
            (min, argmin, below)
        });
        let mut min = f64::INFINITY;
        let mut argmin = 0usize;
        let mut below: Option<usize> = None;
        for (cmin, crank, cbelow) in chunks {
            if cmin < min {
                min = cmin;
                argmin = crank;
            }
            if below.is_none() {
                below = cbelow;
            }
        }
        let word_at = |rank: usize| SphereCursor::at_rank(ctx, n, rank).to_word().display(ctx);
        if first_witness.is_none() {
            if let Some(rank) = below {
                first_witness = Some(word_at(rank));
            }
        }
        rows.push(WeakMixingRow {
            n,
            min_product: min,
            argmin: word_at(argmin),
            below_threshold: below.is_some(),
        });
    }

    let decayed = rows.last().unwrap().min_product <= rows[0].min_product;
    let verdict = if first_witness.is_some() && decayed { "pass" } else { "fail" };
    Ok(WeakMixingTable {
        schema: REPORT_SCHEMA,
        id: "mixing".into(),
        r: ctx.rank(),
        t,
        threshold,
        rows,
        first_witness,
        verdict: verdict.into(),
    })
}
