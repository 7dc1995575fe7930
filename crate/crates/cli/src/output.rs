//! Output files: CSV with a `#`-comment metadata header, JSON with a
//! `meta` block, both written atomically (temp file + rename) so a
//! crashed run never leaves a truncated report behind.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::Run;

/// Metadata stamped into every emitted file.
pub fn meta(run: &Run) -> serde_json::Value {
    json!({
        "schema_version": run.config.schema_version,
        "system": run.system_name,
        "config_hash": run.config_hash,
        "seed": run.config.sampling.seed,
        "normalization_shift": run.family.normalization_shift(),
        "tolerances": {
            "t_root": thermofractal::temperature::T_ROOT_TOL,
            "perron_residual": thermofractal::transfer::PERRON_TOL,
            "zero_pressure": thermofractal::transfer::ZERO_PRESSURE_TOL,
            "degeneracy": thermofractal::temperature::DEGENERACY_TOL,
            "fd_step": thermofractal::temperature::FD_STEP,
        },
    })
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    let tmp = PathBuf::from(format!("{}.tmp", path.display()));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// CSV file: `# key: value` metadata lines, then the frozen column header,
/// then rows. Shortest-round-trip float formatting; UTF-8, LF, `.` decimal.
pub fn write_csv(run: &Run, path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let meta = meta(run);
    let mut out = String::new();
    out.push_str(&format!("# config_hash: {}\n", run.config_hash));
    out.push_str(&format!("# system: {}\n", run.system_name));
    out.push_str(&format!("# seed: {}\n", run.config.sampling.seed));
    out.push_str(&format!("# tolerances: {}\n", meta["tolerances"]));
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// JSON file with the payload under `data` and the run metadata under
/// `meta`. Struct-ordered keys keep output stable across runs.
pub fn write_json<T: Serialize>(run: &Run, path: &Path, data: &T) -> Result<()> {
    let doc = json!({"meta": meta(run), "data": data});
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
