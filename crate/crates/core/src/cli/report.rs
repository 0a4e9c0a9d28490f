//! Report emission: JSON with floats rounded to 10 significant digits, and
//! atomic writes through a temporary file in the target directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::CliError;

/// Significant digits kept in JSON reports. Enough for every tolerance in use and
/// few enough that last-bit noise does not leak into reports.
pub const SIGNIFICANT_DIGITS: usize = 10;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(x: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(x).map_err(|e| CliError::Input(format!("cannot serialize report: {e}")))?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Writes `bytes` to `path` by way of a sibling temporary file and a rename, so
/// readers never see a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path, e)
    })
}

/// Output directory with a record of what was written.
#[derive(Debug)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir, written: Vec::new() }
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let p = self.dir.join(name);
        write_atomic(&p, bytes)?;
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, x: &T) -> Result<PathBuf, CliError> {
        let s = to_json(x)?;
        self.bytes(name, s.as_bytes())
    }

    /// Renders through a `Write` callback, as the CSV writers of the library expect.
    pub fn with_writer(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| io_err(&self.dir.join(name), e))?;
        self.bytes(name, &buf)
    }
}
