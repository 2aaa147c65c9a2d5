//! `arbor`: command-line workbench for boundary representation theory on
//! free groups. Subcommands compute spherical tables, kernel masses, Gram
//! compressions, positivity scans, the convergence experiments, boundary
//! extensions, and a built-in selftest battery.
//!
//! Configuration layers, lowest to highest: defaults, `--config` file,
//! `ARBOR_*` environment variables, explicit flags. Exit codes: 0 verdict
//! pass, 1 verdict failure, 2 usage error, 3 internal error.

mod commands;
mod config;
mod emit;
mod funcspec;
mod selftest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use arbor_core::experiments::EquiMode;
use arbor_core::rd::Pairing;
use arbor_core::ArborError;

use commands::CliError;
use config::{parse_config, parse_level_spec, parse_seed, validate, Format, Overlay, RunConfig};

const AFTER_HELP: &str = "Every flag is also read from the environment with prefix ARBOR_ \
(for example ARBOR_RANK=3); explicit flags win over the environment, which wins over the \
--config file. Function arguments use the forms: one | const:RE[,IM] | ind:WORD | \
oneplus:WORD,RE[,IM] | noise:LEVEL,SEED.\n\nExit codes: 0 verdict pass, 1 verdict \
failure, 2 usage error, 3 internal error.";

#[derive(Parser)]
#[command(name = "arbor", version, about = "Boundary harmonic analysis workbench for free groups", after_help = AFTER_HELP)]
struct Cli {
    /// key = value configuration file, read below environment and flags
    #[arg(long, global = true, env = "ARBOR_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,

    /// Free group rank (at least 2)
    #[arg(long, global = true, env = "ARBOR_RANK")]
    rank: Option<usize>,

    /// Visual metric scale
    #[arg(long, global = true, env = "ARBOR_EPSILON")]
    epsilon: Option<f64>,

    /// Spectral parameter
    #[arg(long, global = true, env = "ARBOR_T")]
    t: Option<f64>,

    /// Second spectral parameter for cross-parameter products
    #[arg(long = "t-prime", global = true, env = "ARBOR_T_PRIME")]
    t_prime: Option<f64>,

    /// Working level, or an inclusive range lo..hi
    #[arg(long, global = true, env = "ARBOR_LEVEL")]
    level: Option<String>,

    /// Largest sphere radius
    #[arg(long = "n-max", global = true, env = "ARBOR_N_MAX")]
    n_max: Option<usize>,

    /// Verdict tolerance
    #[arg(long, global = true, env = "ARBOR_TOL")]
    tol: Option<f64>,

    /// Report format: csv or json
    #[arg(long, global = true, env = "ARBOR_FORMAT")]
    format: Option<String>,

    /// Write the report here (atomically) instead of stdout
    #[arg(long, global = true, env = "ARBOR_OUT", value_name = "PATH")]
    out: Option<PathBuf>,

    /// Directory for content-addressed Gram caches
    #[arg(long = "cache-dir", global = true, env = "ARBOR_CACHE_DIR", value_name = "PATH")]
    cache_dir: Option<PathBuf>,

    /// Worker pool size (0 = runtime default)
    #[arg(long, global = true, env = "ARBOR_THREADS")]
    threads: Option<usize>,

    /// Seed for the sampled oracles, decimal or 0x hex
    #[arg(long, global = true, env = "ARBOR_SEED")]
    seed: Option<String>,

    /// Experiment id recorded in the config (also steers rd's pairing)
    #[arg(long, global = true, env = "ARBOR_EXPERIMENT")]
    experiment: Option<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Orbit,
    Boundary,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PairingArg {
    L2,
    Ht,
    Kt,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spherical function table with the envelope band and ratios
    Phi,
    /// Kernel mass with its series cross-check and level self-energies
    Sigma,
    /// Level compression of the kernel form: entries and spectral summary
    Gram,
    /// Minimum Gram eigenvalues over a parameter grid and level range
    ScanPositivity {
        /// Inclusive level range lo..hi (default: the configured level)
        #[arg(long)]
        levels: Option<String>,
        /// Parameter grid start:step:end
        #[arg(long = "t-grid", default_value = "0.05:0.05:0.9")]
        t_grid: String,
    },
    /// Sphere averages of f(go) g(g^{-1}o) against the product of integrals
    Equi {
        #[arg(long, default_value = "ind:a")]
        f: String,
        #[arg(long, default_value = "one")]
        g: String,
        /// Evaluate at orbit points or at ray extensions
        #[arg(long, value_enum, default_value_t = ModeArg::Orbit)]
        mode: ModeArg,
    },
    /// Kernel-weighted double sphere averages against the kernel integral
    Pairs {
        /// First factor; give both --f and --g or neither (radial case)
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        g: Option<String>,
    },
    /// Normalized coefficient averages against their limit pairing
    Bml {
        /// Power of the smoothing operator on the right slot
        #[arg(long, default_value_t = 0)]
        order: u8,
        #[arg(long, default_value = "ind:a")]
        v: String,
        #[arg(long, default_value = "ind:b")]
        w: String,
        #[arg(long, default_value = "one")]
        f: String,
        #[arg(long, default_value = "one")]
        g: String,
    },
    /// Cross-parameter coefficient products against the splitting limit
    Schur {
        /// Smoothing order on the first pair
        #[arg(long, default_value_t = 0)]
        i: u8,
        /// Smoothing order on the second pair
        #[arg(long, default_value_t = 0)]
        j: u8,
        #[arg(long, default_value = "ind:a")]
        v: String,
        #[arg(long, default_value = "ind:b")]
        w: String,
        #[arg(long, default_value = "ind:a")]
        v2: String,
        #[arg(long, default_value = "ind:b")]
        w2: String,
        #[arg(long, default_value = "one")]
        f: String,
        #[arg(long, default_value = "one")]
        g: String,
    },
    /// Sphere-average operator norm lower bounds against the envelope
    Rd {
        /// Pairing family (default l2, or the configured experiment hint)
        #[arg(long, value_enum)]
        pairing: Option<PairingArg>,
    },
    /// Transport invariance of the rough seminorm at the flat parameter
    Besov {
        #[arg(long, default_value = "noise:2,7")]
        f: String,
        /// Group element doing the transport
        #[arg(long, default_value = "ab")]
        gamma: String,
    },
    /// Boundary data extended inward along a ray, with the limit error
    Poisson {
        #[arg(long, default_value = "oneplus:ab,0.5")]
        f: String,
        /// Periodic ray block, repeated to the configured depth
        #[arg(long, default_value = "ab")]
        ray: String,
    },
    /// Decay witnesses for paired coefficient products over spheres
    Mixing {
        #[arg(long, default_value = "ind:a")]
        v: String,
        #[arg(long, default_value = "ind:b")]
        w: String,
        #[arg(long, default_value = "ind:a")]
        v2: String,
        #[arg(long, default_value = "ind:b")]
        w2: String,
    },
    /// Full deterministic invariant battery; exits 0 only if every check passes
    Selftest,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(config::ConfigError::Invalid {
                key: "config".into(),
                msg: format!("cannot read {}: {e}", path.display()),
            })
        })?;
        cfg.apply(&parse_config(&text)?);
    }
    let flags = Overlay {
        rank: cli.rank,
        epsilon: cli.epsilon,
        t: cli.t,
        t_prime: cli.t_prime,
        level: cli.level.as_deref().map(parse_level_spec).transpose()?,
        n_max: cli.n_max,
        tolerance: cli.tol,
        experiment: cli.experiment.clone(),
        out: cli.out.clone(),
        format: cli.format.as_deref().map(Format::parse).transpose()?,
        cache_dir: cli.cache_dir.clone(),
        threads: cli.threads,
        seed: cli.seed.as_deref().map(parse_seed).transpose()?,
    };
    cfg.apply(&flags);
    validate(&cfg)?;
    Ok(cfg)
}

fn dispatch(cmd: &Cmd, cfg: &RunConfig) -> Result<emit::Rendered, CliError> {
    match cmd {
        Cmd::Phi => commands::phi(cfg),
        Cmd::Sigma => commands::sigma_cmd(cfg),
        Cmd::Gram => commands::gram(cfg),
        Cmd::ScanPositivity { levels, t_grid } => {
            let levels = levels.as_deref().map(parse_level_spec).transpose()?;
            commands::scan_positivity(cfg, levels, t_grid)
        }
        Cmd::Equi { f, g, mode } => {
            let mode = match mode {
                ModeArg::Orbit => EquiMode::Orbit,
                ModeArg::Boundary => EquiMode::Boundary,
            };
            commands::equi(cfg, f, g, mode)
        }
        Cmd::Pairs { f, g } => commands::pairs(cfg, f.as_deref(), g.as_deref()),
        Cmd::Bml { order, v, w, f, g } => commands::bml(cfg, *order, v, w, f, g),
        Cmd::Schur { i, j, v, w, v2, w2, f, g } => {
            commands::schur(cfg, (*i, *j), v, w, v2, w2, f, g)
        }
        Cmd::Rd { pairing } => {
            let pairing = pairing.map(|p| match p {
                PairingArg::L2 => Pairing::L2,
                PairingArg::Ht => Pairing::Ht,
                PairingArg::Kt => Pairing::Kt,
            });
            commands::rd(cfg, pairing)
        }
        Cmd::Besov { f, gamma } => commands::besov(cfg, f, gamma),
        Cmd::Poisson { f, ray } => commands::poisson(cfg, f, ray),
        Cmd::Mixing { v, w, v2, w2 } => commands::mixing(cfg, v, w, v2, w2),
        Cmd::Selftest => commands::selftest_cmd(cfg),
    }
}

/// Kinds and exit codes for library errors: parameter and domain problems
/// are usage (2); broken caches, failed IO, and convergence failures are
/// internal (3).
fn classify(e: &ArborError) -> (&'static str, i32) {
    match e {
        ArborError::Precondition(_)
        | ArborError::Budget { .. }
        | ArborError::Divergent { .. }
        | ArborError::Domain { .. } => ("precondition", 2),
        ArborError::NoConvergence { .. } | ArborError::CacheInvalid(_) | ArborError::Io(_) => {
            ("internal", 3)
        }
    }
}

fn fail(json_mode: bool, kind: &str, message: &str, code: i32) -> i32 {
    if json_mode {
        eprintln!("{}", emit::json_error(kind, message));
    } else {
        eprintln!("error ({kind}): {message}");
    }
    code
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    // Before the config resolves, error rendering can only honor an
    // explicit flag or environment choice of format.
    let early_json = matches!(cli.format.as_deref(), Some("json"));
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(CliError::Usage(e)) => return fail(early_json, "usage", &e.to_string(), 2),
        Err(CliError::Core(e)) => {
            let (kind, code) = classify(&e);
            return fail(early_json, kind, &e.to_string(), code);
        }
    };
    let json_mode = cfg.format == Format::Json;
    if cfg.threads > 0 {
        let built = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
        if built.is_err() {
            return fail(json_mode, "internal", "worker pool already initialized", 3);
        }
    }
    match dispatch(&cli.cmd, &cfg) {
        Ok(rendered) => match emit::emit(&cfg, &rendered) {
            Ok(()) => {
                if rendered.pass {
                    0
                } else {
                    1
                }
            }
            Err(e) => fail(json_mode, "internal", &format!("write failed: {e}"), 3),
        },
        Err(CliError::Usage(e)) => fail(json_mode, "usage", &e.to_string(), 2),
        Err(CliError::Core(e)) => {
            let (kind, code) = classify(&e);
            fail(json_mode, kind, &e.to_string(), code)
        }
    }
}

fn main() {
    std::process::exit(real_main());
}
