//! Atomic file output and number formatting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Seventeen significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Collects every file written during a run.
#[derive(Debug, Default)]
pub struct Sink {
    pub out_dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(out_dir: PathBuf) -> Self {
        Self {
            out_dir,
            written: Vec::new(),
        }
    }

    /// Relative paths land in the output directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    /// Writes to a temporary file beside the target, then renames it.
    pub fn write(&mut self, p: &Path, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.resolve(p);
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
        }
        tmp.persist(&path).map_err(|e| e.error)?;
        log::info!("wrote {}", path.display());
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, p: &Path, value: &T) -> std::io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(p, text.as_bytes())
    }
}
