use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Directory used when `--out` is absent; unset means standard output.
pub const OUT_DIR_VAR: &str = "TIERWALK_OUT_DIR";

/// Resolves `--out`, then `$TIERWALK_OUT_DIR/<default_name>`, then stdout.
pub fn destination(out: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    match out {
        Some(path) => Some(path.to_path_buf()),
        None => std::env::var_os(OUT_DIR_VAR).map(|dir| PathBuf::from(dir).join(default_name)),
    }
}

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(open(path)?))
}

/// Shortest representation that reads back to the same value; exponent
/// form outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn opt(x: Option<f64>) -> String {
    num(x.unwrap_or(f64::INFINITY))
}
