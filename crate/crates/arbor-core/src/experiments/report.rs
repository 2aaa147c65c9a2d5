//! Serializable result tables for the sphere-average experiments.
//!
//! Every experiment produces one [`ExperimentReport`]: a fixed parameter
//! block, one row per sphere radius, and a verdict. Reports are deterministic
//! by construction (fixed-order compensated summation everywhere), so two
//! runs with the same parameters serialize to identical bytes. Wall-clock
//! fields are the one exception; they are stripped unless explicitly
//! requested.

use serde::Serialize;

/// Schema version stamped into every serialized report.
pub const REPORT_SCHEMA: u32 = 1;

/// Rows must not increase by more than this relative slack for the trend
/// check.
const TREND_SLACK: f64 = 1e-12;

/// Absolute floor for the trend check: rows whose relative error sits at
/// roundoff scale count as ties, so exact experiments are not failed for a
/// one-ulp wiggle between zero rows.
const TREND_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentParams {
    pub r: usize,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<u8>,
    pub levels: Vec<usize>,
    pub n_min: usize,
    pub n_max: usize,
    pub tol: f64,
}

impl ExperimentParams {
    pub fn new(r: usize, epsilon: f64, n_min: usize, n_max: usize, tol: f64) -> Self {
        ExperimentParams {
            r,
            epsilon,
            t: None,
            t_prime: None,
            i: None,
            j: None,
            levels: Vec::new(),
            n_min,
            n_max,
            tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl ExperimentRow {
    /// Builds a row from the computed sphere average and the limit value.
    /// Relative error falls back to the absolute error when the limit
    /// vanishes.
    pub fn new(n: usize, lhs: num_complex::Complex64, rhs: num_complex::Complex64) -> Self {
        let abs_err = (lhs - rhs).norm();
        let rel_err = if rhs.norm() > 0.0 { abs_err / rhs.norm() } else { abs_err };
        ExperimentRow {
            n,
            lhs_re: lhs.re,
            lhs_im: lhs.im,
            rhs_re: rhs.re,
            rhs_im: rhs.im,
            abs_err,
            rel_err,
            wall_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub id: String,
    pub params: ExperimentParams,
    pub rows: Vec<ExperimentRow>,
    pub verdict: String,
}

/// Convergence verdict: the final row must meet the tolerance and the
/// relative errors must be non-increasing over the last `window` rows.
/// The window shrinks to the table when the table is shorter.
pub fn judge(rows: &[ExperimentRow], tol: f64, window: usize) -> String {
    if rows.is_empty() {
        return "fail".into();
    }
    let last = rows.last().unwrap();
    if !(last.rel_err.is_finite() && last.rel_err <= tol) {
        return "fail".into();
    }
    let w = window.min(rows.len());
    let tail = &rows[rows.len() - w..];
    for pair in tail.windows(2) {
        if pair[1].rel_err > pair[0].rel_err * (1.0 + TREND_SLACK) + TREND_FLOOR {
            return "fail".into();
        }
    }
    "pass".into()
}

/// Number of trailing rows the trend check inspects.
pub const TREND_WINDOW: usize = 4;

impl ExperimentReport {
    pub fn new(id: impl Into<String>, params: ExperimentParams, rows: Vec<ExperimentRow>) -> Self {
        let verdict = judge(&rows, params.tol, TREND_WINDOW);
        ExperimentReport { schema: REPORT_SCHEMA, id: id.into(), params, rows, verdict }
    }

    pub fn pass(&self) -> bool {
        self.verdict == "pass"
    }

    /// JSON serialization. Timing fields are dropped unless requested so
    /// that default output is byte-identical across runs and thread counts.
    pub fn to_json(&self, with_timing: bool) -> String {
        let mut report = self.clone();
        if !with_timing {
            for row in &mut report.rows {
                row.wall_ms = None;
            }
        }
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail")
    }

    /// CSV serialization of the rows. Column order is frozen; the timing
    /// column appears only when requested.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::new();
        out.push_str("n,lhs_re,lhs_im,rhs_re,rhs_im,abs_err,rel_err");
        if with_timing {
            out.push_str(",wall_ms");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}",
                row.n, row.lhs_re, row.lhs_im, row.rhs_re, row.rhs_im, row.abs_err, row.rel_err
            ));
            if with_timing {
                match row.wall_ms {
                    Some(ms) => out.push_str(&format!(",{ms}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn row(n: usize, rel: f64) -> ExperimentRow {
        ExperimentRow {
            n,
            lhs_re: 1.0,
            lhs_im: 0.0,
            rhs_re: 1.0,
            rhs_im: 0.0,
            abs_err: rel,
            rel_err: rel,
            wall_ms: None,
        }
    }

    #[test]
    fn verdict_requires_tolerance_and_trend() {
        let rows: Vec<_> = (1..=6).map(|n| row(n, 0.1 / n as f64)).collect();
        assert_eq!(judge(&rows, 0.05, 4), "pass");
        assert_eq!(judge(&rows, 0.01, 4), "fail");
        let mut bumpy = rows.clone();
        bumpy[4].rel_err = 0.5;
        assert_eq!(judge(&bumpy, 0.05, 4), "fail");
        let flat: Vec<_> = (1..=5).map(|n| row(n, 0.0)).collect();
        assert_eq!(judge(&flat, 0.05, 4), "pass");
        assert_eq!(judge(&[], 0.05, 4), "fail");
    }

    #[test]
    fn row_errors() {
        let r = ExperimentRow::new(3, Complex64::new(1.1, 0.0), Complex64::new(1.0, 0.0));
        assert!((r.abs_err - 0.1).abs() < 1e-12);
        assert!((r.rel_err - 0.1).abs() < 1e-12);
        let z = ExperimentRow::new(3, Complex64::new(0.25, 0.0), Complex64::new(0.25, 0.0));
        assert_eq!(z.abs_err, 0.0);
        assert_eq!(z.rel_err, 0.0);
        let zero_rhs = ExperimentRow::new(1, Complex64::new(0.3, 0.4), Complex64::ZERO);
        assert!((zero_rhs.rel_err - 0.5).abs() < 1e-12);
    }

    #[test]
    fn serialization_is_stable_and_timing_gated() {
        let params = ExperimentParams {
            t: Some(0.25),
            levels: vec![1, 0],
            ..ExperimentParams::new(2, 1.0, 1, 3, 0.05)
        };
        let mut rows = vec![row(1, 0.0), row(2, 0.0), row(3, 0.0)];
        rows[1].wall_ms = Some(12.5);
        let report = ExperimentReport::new("demo", params, rows);
        assert!(report.pass());

        let plain = report.to_json(false);
        assert!(!plain.contains("wall_ms"));
        assert!(plain.contains("\"schema\": 1"));
        assert!(plain.contains("\"id\": \"demo\""));
        assert!(plain.contains("\"verdict\": \"pass\""));
        assert!(!plain.contains("t_prime"));
        assert_eq!(plain, report.to_json(false));

        let timed = report.to_json(true);
        assert!(timed.contains("\"wall_ms\": 12.5"));

        let csv = report.to_csv(false);
        assert!(csv.starts_with("n,lhs_re,lhs_im,rhs_re,rhs_im,abs_err,rel_err\n"));
        assert_eq!(csv.lines().count(), 4);
        let timed_csv = report.to_csv(true);
        assert!(timed_csv.lines().next().unwrap().ends_with(",wall_ms"));
        assert!(timed_csv.contains("12.5"));
    }
}
