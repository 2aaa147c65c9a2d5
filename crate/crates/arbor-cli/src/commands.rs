//! One function per subcommand. Each returns the report rendered in both
//! formats plus the verdict; the caller picks the format, writes the
//! output, and turns the verdict into the exit code.

use std::fmt::Write as _;

use serde::Serialize;

use arbor_core::cylfn::apply_pi;
use arbor_core::experiments::{
    bml_experiment, equi_experiment, pair_kernel_experiment, rd_experiment, schur_experiment,
    weak_mixing_probe, EquiMode, PairTest,
};
use arbor_core::kernel::{
    besov_seminorm, gram_matrix, gram_matrix_cached, self_energy, sigma, sigma_series, GramMatrix,
};
use arbor_core::poisson::poisson_transform;
use arbor_core::rd::Pairing;
use arbor_core::spectral::{spectral_decomp, PositivityRow};
use arbor_core::spherical::{hca_check, SphericalTable};
use arbor_core::tolerances::{HCA_BAND, NEGATIVE_WITNESS, PSD_SLACK, SIGMA_ORACLE_ABS};
use arbor_core::word::Ray;
use arbor_core::{ArborError, GroupContext, ReducedWord};

use crate::config::{ConfigError, RunConfig};
use crate::emit::Rendered;
use crate::funcspec::{parse_cylinder, parse_tree};
use crate::selftest;

const SCHEMA: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(ConfigError),
    Core(ArborError),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e)
    }
}

impl From<ArborError> for CliError {
    fn from(e: ArborError) -> Self {
        CliError::Core(e)
    }
}

pub fn context(cfg: &RunConfig) -> Result<GroupContext, CliError> {
    GroupContext::new(cfg.rank, cfg.epsilon).map_err(CliError::Core)
}

fn verdict(ok: bool) -> String {
    if ok { "pass".into() } else { "fail".into() }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serialization cannot fail")
}

// ---------------------------------------------------------------- phi

#[derive(Serialize)]
struct PhiReport<'a> {
    schema: u32,
    id: &'static str,
    t: f64,
    band_low: f64,
    band_high: f64,
    rows: &'a [arbor_core::spherical::SphericalRow],
    verdict: String,
}

pub fn phi(cfg: &RunConfig) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let table = SphericalTable::compute(&ctx, cfg.t, cfg.n_max);
    let (lo, hi) = hca_check(&ctx, cfg.t, cfg.n_max)?;
    let pass = lo > 0.0 && hi.is_finite() && hi / lo <= HCA_BAND;
    let mut csv = Vec::new();
    table.to_csv(&mut csv)?;
    let report = PhiReport {
        schema: SCHEMA,
        id: "phi",
        t: cfg.t,
        band_low: lo,
        band_high: hi,
        rows: &table.rows,
        verdict: verdict(pass),
    };
    Ok(Rendered { json: pretty(&report), csv: String::from_utf8(csv).unwrap(), pass })
}

// ---------------------------------------------------------------- sigma

#[derive(Serialize)]
struct QuantityRow {
    quantity: String,
    value: f64,
}

#[derive(Serialize)]
struct SigmaReport {
    schema: u32,
    id: &'static str,
    t: f64,
    rows: Vec<QuantityRow>,
    verdict: String,
}

/// Series depth used for the independent cross-check row.
const SIGMA_SERIES_DEPTH: usize = 200;

pub fn sigma_cmd(cfg: &RunConfig) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let s = sigma(&ctx, cfg.t)?;
    let series = sigma_series(&ctx, cfg.t, SIGMA_SERIES_DEPTH);
    let diff = (s - series).abs();
    let mut rows = vec![
        QuantityRow { quantity: "sigma".into(), value: s },
        QuantityRow { quantity: format!("series_{SIGMA_SERIES_DEPTH}"), value: series },
        QuantityRow { quantity: "series_abs_diff".into(), value: diff },
    ];
    for k in 1..=cfg.level.max(1) {
        rows.push(QuantityRow {
            quantity: format!("self_energy_{k}"),
            value: self_energy(&ctx, cfg.t, k)?,
        });
    }
    let pass = diff <= SIGMA_ORACLE_ABS;
    let report =
        SigmaReport { schema: SCHEMA, id: "sigma", t: cfg.t, rows, verdict: verdict(pass) };
    let mut csv = String::from("quantity,value\n");
    for row in &report.rows {
        writeln!(csv, "{},{}", row.quantity, row.value).unwrap();
    }
    Ok(Rendered { json: pretty(&report), csv, pass })
}

// ---------------------------------------------------------------- gram

#[derive(Serialize)]
struct GramReport<'a> {
    schema: u32,
    id: &'static str,
    t: f64,
    level: usize,
    dim: usize,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
    total_sum: f64,
    entries: &'a [f64],
    verdict: String,
}

fn gram_with_cache(ctx: &GroupContext, cfg: &RunConfig, t: f64, k: usize) -> Result<GramMatrix, CliError> {
    Ok(match &cfg.cache_dir {
        Some(dir) => gram_matrix_cached(ctx, t, k, dir)?,
        None => gram_matrix(ctx, t, k)?,
    })
}

pub fn gram(cfg: &RunConfig) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let k = cfg.level.max(1);
    let g = gram_with_cache(&ctx, cfg, cfg.t, k)?;
    let decomp = spectral_decomp(&g.as_matrix())?;
    let report = GramReport {
        schema: SCHEMA,
        id: "gram",
        t: cfg.t,
        level: k,
        dim: g.dim(),
        min_eigenvalue: decomp.min_eigenvalue(),
        max_eigenvalue: decomp.max_eigenvalue(),
        total_sum: g.total_sum(),
        entries: g.entries(),
        verdict: verdict(true),
    };
    let mut csv = String::from("i,j,value\n");
    for i in 0..g.dim() {
        for j in 0..g.dim() {
            writeln!(csv, "{i},{j},{}", g.entry(i, j)).unwrap();
        }
    }
    Ok(Rendered { json: pretty(&report), csv, pass: true })
}

// ---------------------------------------------------------------- scan-positivity

#[derive(Serialize)]
struct ScanRow {
    t: f64,
    level: usize,
    dim: usize,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
    normalized_min: f64,
}

#[derive(Serialize)]
struct FirstNegative {
    t: f64,
    level: usize,
}

#[derive(Serialize)]
struct ScanReport {
    schema: u32,
    id: &'static str,
    level_low: usize,
    level_high: usize,
    rows: Vec<ScanRow>,
    first_negative: Option<FirstNegative>,
    verdict: String,
}

/// Parses `start:step:end` into an inclusive grid. The three parts are read
/// as decimal literals over a common power-of-ten denominator, so round
/// grid points come out at their nearest-float representations instead of
/// accumulating step error.
pub fn parse_t_grid(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |msg: String| ConfigError::Invalid { key: "t-grid".into(), msg };
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad(format!("expected start:step:end, got '{spec}'")));
    }
    fn decimal(s: &str) -> Option<(i64, u32)> {
        let s = s.trim();
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if frac.len() > 12 {
            return None;
        }
        let neg = int.starts_with('-');
        let int = int.strip_prefix('-').unwrap_or(int);
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        let digits = format!("{int}{frac}");
        let mag: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
        Some((if neg { -mag } else { mag }, frac.len() as u32))
    }
    let nums: Vec<(i64, u32)> = parts
        .iter()
        .map(|p| decimal(p).ok_or_else(|| bad(format!("bad decimal '{p}'"))))
        .collect::<Result<_, _>>()?;
    let scale = nums.iter().map(|&(_, s)| s).max().unwrap();
    let denom = 10i64.pow(scale);
    let up = |(m, s): (i64, u32)| m * 10i64.pow(scale - s);
    let (start, step, end) = (up(nums[0]), up(nums[1]), up(nums[2]));
    if step <= 0 {
        return Err(bad("step must be positive".into()));
    }
    if end < start {
        return Err(bad("end is before start".into()));
    }
    Ok((0..)
        .map(|k| start + k * step)
        .take_while(|&v| v <= end)
        .map(|v| v as f64 / denom as f64)
        .collect())
}

pub fn scan_positivity(
    cfg: &RunConfig,
    levels: Option<(usize, Option<usize>)>,
    t_grid: &str,
) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let grid = parse_t_grid(t_grid)?;
    let (lo, hi) = match levels {
        Some((lo, hi)) => (lo, hi.unwrap_or(lo)),
        None => (cfg.level, cfg.level_hi.unwrap_or(cfg.level)),
    };
    if lo < 1 {
        return Err(CliError::Usage(ConfigError::Invalid {
            key: "levels".into(),
            msg: "compression levels start at 1".into(),
        }));
    }
    let mut rows = Vec::with_capacity(grid.len() * (hi - lo + 1));
    for &t in &grid {
        for k in lo..=hi {
            let g = gram_with_cache(&ctx, cfg, t, k)?;
            let decomp = spectral_decomp(&g.as_matrix())?;
            let row = PositivityRow {
                t,
                level: k,
                dim: g.dim(),
                min_eigenvalue: decomp.min_eigenvalue(),
                max_eigenvalue: decomp.max_eigenvalue(),
            };
            rows.push(ScanRow {
                t,
                level: k,
                dim: row.dim,
                min_eigenvalue: row.min_eigenvalue,
                max_eigenvalue: row.max_eigenvalue,
                normalized_min: row.normalized_min(),
            });
        }
    }
    let first_negative = rows
        .iter()
        .find(|r| r.normalized_min < NEGATIVE_WITNESS)
        .map(|r| FirstNegative { t: r.t, level: r.level });
    // The dichotomy: clean positivity up to the midpoint.
    let pass = rows.iter().filter(|r| r.t <= 0.5).all(|r| r.min_eigenvalue >= PSD_SLACK);
    let report = ScanReport {
        schema: SCHEMA,
        id: "scan-positivity",
        level_low: lo,
        level_high: hi,
        rows,
        first_negative,
        verdict: verdict(pass),
    };
    let mut csv = String::from("t,level,dim,min_eigenvalue,max_eigenvalue,normalized_min\n");
    for r in &report.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.t, r.level, r.dim, r.min_eigenvalue, r.max_eigenvalue, r.normalized_min
        )
        .unwrap();
    }
    Ok(Rendered { json: pretty(&report), csv, pass })
}

// ---------------------------------------------------------------- experiments

pub fn equi(cfg: &RunConfig, f: &str, g: &str, mode: EquiMode) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let f = parse_tree(&ctx, "f", f)?;
    let g = parse_tree(&ctx, "g", g)?;
    let report = equi_experiment(&ctx, &f, &g, cfg.n_max, mode, cfg.tolerance)?;
    Ok(Rendered { json: report.to_json(false), csv: report.to_csv(false), pass: report.pass() })
}

pub fn pairs(cfg: &RunConfig, f: Option<&str>, g: Option<&str>) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let (ft, gt);
    let pair = match (f, g) {
        (None, None) => PairTest::one(),
        (Some(fs), Some(gs)) => {
            ft = parse_tree(&ctx, "f", fs)?;
            gt = parse_tree(&ctx, "g", gs)?;
            PairTest::Product { f: &ft, g: &gt }
        }
        _ => {
            return Err(CliError::Usage(ConfigError::Invalid {
                key: "f".into(),
                msg: "pairs wants both --f and --g, or neither for the radial case".into(),
            }))
        }
    };
    let report = pair_kernel_experiment(&ctx, cfg.t, &pair, cfg.n_max, cfg.tolerance)?;
    Ok(Rendered { json: report.to_json(false), csv: report.to_csv(false), pass: report.pass() })
}

#[allow(clippy::too_many_arguments)]
pub fn bml(
    cfg: &RunConfig,
    order: u8,
    v: &str,
    w: &str,
    f: &str,
    g: &str,
) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let v = parse_cylinder(&ctx, "v", v)?;
    let w = parse_cylinder(&ctx, "w", w)?;
    let f = parse_tree(&ctx, "f", f)?;
    let g = parse_tree(&ctx, "g", g)?;
    let report = bml_experiment(&ctx, cfg.t, order, &v, &w, &f, &g, cfg.n_max, cfg.tolerance)?;
    Ok(Rendered { json: report.to_json(false), csv: report.to_csv(false), pass: report.pass() })
}

#[allow(clippy::too_many_arguments)]
pub fn schur(
    cfg: &RunConfig,
    orders: (u8, u8),
    v: &str,
    w: &str,
    v2: &str,
    w2: &str,
    f: &str,
    g: &str,
) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let t_prime = cfg.t_prime.unwrap_or(cfg.t);
    let v = parse_cylinder(&ctx, "v", v)?;
    let w = parse_cylinder(&ctx, "w", w)?;
    let v2 = parse_cylinder(&ctx, "v2", v2)?;
    let w2 = parse_cylinder(&ctx, "w2", w2)?;
    let f = parse_tree(&ctx, "f", f)?;
    let g = parse_tree(&ctx, "g", g)?;
    let report = schur_experiment(
        &ctx,
        cfg.t,
        t_prime,
        orders.0,
        orders.1,
        &v,
        &w,
        &v2,
        &w2,
        &f,
        &g,
        cfg.n_max,
        cfg.tolerance,
    )?;
    Ok(Rendered { json: report.to_json(false), csv: report.to_csv(false), pass: report.pass() })
}

pub fn rd(cfg: &RunConfig, pairing: Option<Pairing>) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let pairing = pairing.unwrap_or(match cfg.experiment.as_deref() {
        Some("ht") => Pairing::Ht,
        Some("kt") => Pairing::Kt,
        _ => Pairing::L2,
    });
    let report = rd_experiment(&ctx, cfg.t, pairing, cfg.n_max, cfg.level)?;
    Ok(Rendered { json: report.to_json(), csv: report.to_csv(), pass: report.pass() })
}

pub fn mixing(
    cfg: &RunConfig,
    v: &str,
    w: &str,
    v2: &str,
    w2: &str,
) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let v = parse_cylinder(&ctx, "v", v)?;
    let w = parse_cylinder(&ctx, "w", w)?;
    let v2 = parse_cylinder(&ctx, "v2", v2)?;
    let w2 = parse_cylinder(&ctx, "w2", w2)?;
    let table = weak_mixing_probe(&ctx, cfg.t, &v, &w, &v2, &w2, cfg.n_max, cfg.tolerance)?;
    Ok(Rendered { json: table.to_json(), csv: table.to_csv(), pass: table.pass() })
}

// ---------------------------------------------------------------- besov

/// The parameter where transport is a pure composition and the rough-norm
/// form is carried exactly.
const FLAT_PARAMETER: f64 = -0.5;

#[derive(Serialize)]
struct BesovReport {
    schema: u32,
    id: &'static str,
    t: f64,
    gamma: String,
    seminorm: f64,
    transported: f64,
    rel_err: f64,
    verdict: String,
}

pub fn besov(cfg: &RunConfig, f: &str, gamma: &str) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let f = parse_cylinder(&ctx, "f", f)?;
    let gamma = ReducedWord::parse(&ctx, gamma).map_err(CliError::Core)?;
    let before = besov_seminorm(&ctx, FLAT_PARAMETER, &f)?;
    let moved = apply_pi(&ctx, FLAT_PARAMETER, &gamma, &f)?;
    let after = besov_seminorm(&ctx, FLAT_PARAMETER, &moved)?;
    let rel = (after - before).abs() / before.abs().max(f64::MIN_POSITIVE);
    let pass = rel <= cfg.tolerance;
    let report = BesovReport {
        schema: SCHEMA,
        id: "besov",
        t: FLAT_PARAMETER,
        gamma: gamma.display(&ctx),
        seminorm: before,
        transported: after,
        rel_err: rel,
        verdict: verdict(pass),
    };
    let csv = format!(
        "gamma,seminorm,transported,rel_err\n{},{},{},{}\n",
        report.gamma, report.seminorm, report.transported, report.rel_err
    );
    Ok(Rendered { json: pretty(&report), csv, pass })
}

// ---------------------------------------------------------------- poisson

#[derive(Serialize)]
struct PoissonRow {
    n: usize,
    re: f64,
    im: f64,
    abs_err: f64,
}

#[derive(Serialize)]
struct PoissonReport {
    schema: u32,
    id: &'static str,
    t: f64,
    ray: String,
    level: usize,
    target_re: f64,
    target_im: f64,
    rows: Vec<PoissonRow>,
    verdict: String,
}

pub fn poisson(cfg: &RunConfig, f: &str, ray: &str) -> Result<Rendered, CliError> {
    let ctx = context(cfg)?;
    let f = parse_cylinder(&ctx, "f", f)?;
    let block = ReducedWord::parse(&ctx, ray).map_err(CliError::Core)?;
    let ray = Ray::new(&ctx, ReducedWord::empty(), block)?;
    let target = f.eval_prefix(&ctx, ray.prefix_word(f.level()).letters());
    let mut rows = Vec::with_capacity(cfg.n_max + 1);
    for n in 0..=cfg.n_max {
        let x = ray.prefix_word(n);
        let value = poisson_transform(&ctx, cfg.t, &f, &x)?;
        rows.push(PoissonRow { n, re: value.re, im: value.im, abs_err: (value - target).norm() });
    }
    let pass = rows.last().map(|r| r.abs_err <= cfg.tolerance).unwrap_or(false);
    let report = PoissonReport {
        schema: SCHEMA,
        id: "poisson",
        t: cfg.t,
        ray: ray.prefix_word(cfg.n_max.min(8)).display(&ctx),
        level: f.level(),
        target_re: target.re,
        target_im: target.im,
        rows,
        verdict: verdict(pass),
    };
    let mut csv = String::from("n,re,im,abs_err\n");
    for r in &report.rows {
        writeln!(csv, "{},{},{},{}", r.n, r.re, r.im, r.abs_err).unwrap();
    }
    Ok(Rendered { json: pretty(&report), csv, pass })
}

// ---------------------------------------------------------------- selftest

#[derive(Serialize)]
struct SelftestReport {
    schema: u32,
    id: &'static str,
    generator: &'static str,
    seed: u64,
    rows: Vec<selftest::CheckRow>,
    verdict: String,
}

pub fn selftest_cmd(cfg: &RunConfig) -> Result<Rendered, CliError> {
    let rows = selftest::run_battery(cfg.seed)?;
    let pass = rows.iter().all(|r| r.status == "pass");
    let report = SelftestReport {
        schema: SCHEMA,
        id: "selftest",
        generator: "chacha8",
        seed: cfg.seed,
        rows,
        verdict: verdict(pass),
    };
    let mut csv = String::from("name,status,detail\n");
    for r in &report.rows {
        // detail is free text; quote it so embedded commas stay one field
        writeln!(csv, "{},{},\"{}\"", r.name, r.status, r.detail.replace('"', "\"\"")).unwrap();
    }
    Ok(Rendered { json: pretty(&report), csv, pass })
}
