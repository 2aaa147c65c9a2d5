//! Report emission: the reproducibility header, format wrapping, atomic
//! file writes, and machine-readable error objects.

use std::io::Write;
use std::path::Path;

use crate::config::{Format, RunConfig};

/// Artifact version stamped into every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One fully rendered command result: the same content in both formats,
/// plus the verdict that decides the exit code.
pub struct Rendered {
    pub json: String,
    pub csv: String,
    pub pass: bool,
}

fn opt_path(p: &Option<std::path::PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "-".into())
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

/// The comment header prepended to CSV output. Field order is frozen.
pub fn csv_header(cfg: &RunConfig) -> String {
    let level = match cfg.level_hi {
        Some(hi) => format!("{}..{hi}", cfg.level),
        None => cfg.level.to_string(),
    };
    format!(
        "# arbor {VERSION}\n# config: rank={} epsilon={} t={} t_prime={} level={} n_max={} \
         tol={} experiment={} format={} threads={} seed={:#x} cache_dir={} out={}\n",
        cfg.rank,
        cfg.epsilon,
        cfg.t,
        opt_f64(cfg.t_prime),
        level,
        cfg.n_max,
        cfg.tolerance,
        cfg.experiment.as_deref().unwrap_or("-"),
        match cfg.format {
            Format::Csv => "csv",
            Format::Json => "json",
        },
        cfg.threads,
        cfg.seed,
        opt_path(&cfg.cache_dir),
        opt_path(&cfg.out),
    )
}

/// Wraps a command's JSON body with the reproducibility header. The body is
/// embedded verbatim (re-indented), so the inner key order is whatever the
/// producing type fixed.
pub fn json_envelope(cfg: &RunConfig, body: &str) -> String {
    let config = serde_json::to_string(cfg).expect("config serialization cannot fail");
    let mut indented = String::with_capacity(body.len() + 64);
    for (i, line) in body.lines().enumerate() {
        if i > 0 {
            indented.push_str("\n  ");
        }
        indented.push_str(line);
    }
    format!(
        "{{\n  \"schema\": 1,\n  \"version\": \"{VERSION}\",\n  \"config\": {config},\n  \"report\": {indented}\n}}\n"
    )
}

/// Renders an error as the machine-readable object used in JSON mode.
pub fn json_error(kind: &str, message: &str) -> String {
    serde_json::json!({
        "schema": 1,
        "version": VERSION,
        "error": { "kind": kind, "message": message },
    })
    .to_string()
}

/// Writes through a temp file in the target directory and renames, so a
/// crash never leaves a half-written report at the final path.
pub fn atomic_write(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Sends the rendered report to stdout or to the configured path.
pub fn emit(cfg: &RunConfig, rendered: &Rendered) -> std::io::Result<()> {
    let text = match cfg.format {
        Format::Json => json_envelope(cfg, &rendered.json),
        Format::Csv => format!("{}{}", csv_header(cfg), rendered.csv),
    };
    match &cfg.out {
        Some(path) => atomic_write(path, &text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
