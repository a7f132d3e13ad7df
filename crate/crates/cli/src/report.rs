//! Output helpers shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Report schema version written into every JSON document.
pub const SCHEMA: u32 = 1;

/// Full-precision CSV cell: 17 significant digits, empty for missing values.
pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.16e}"),
        Some(x) => x.to_string(),
        None => String::new(),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    fs::write(&path, to_json(value)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[derive(Serialize)]
struct ErrorBody {
    kind: String,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport {
    schema: u32,
    status: &'static str,
    error: ErrorBody,
}

/// Kind tag of an error: the library's own kind when available.
pub fn error_kind(err: &anyhow::Error) -> String {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<thinspec::Error>() {
            return e.kind().to_string();
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io".into();
        }
    }
    "error".into()
}

/// Structured error document for a failed command.
pub fn error_json(err: &anyhow::Error) -> String {
    let report = ErrorReport {
        schema: SCHEMA,
        status: "error",
        error: ErrorBody {
            kind: error_kind(err),
            message: format!("{err:#}"),
        },
    };
    to_json(&report).unwrap_or_else(|_| format!("{{\"schema\":1,\"status\":\"error\",\"error\":{{\"message\":{:?}}}}}\n", err.to_string()))
}
