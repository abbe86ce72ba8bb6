//! Artifact output: CSV files, JSON metadata sidecars and optional gnuplot
//! scripts.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Write rows to `<dir>/<name>` with a header line. Values are written with
/// the shortest round-trip float formatting, so reruns are byte-identical.
pub fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    f.flush()?;
    Ok(path)
}

/// Git-style blob hash of the canonical config bytes (sha256 over
/// `blob <len>\0<content>`).
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", bytes.len()).as_bytes());
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(7 + 2 * digest.len());
    out.push_str("sha256:");
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Serialize)]
struct Sidecar<'a, C: Serialize> {
    experiment: &'a str,
    config: &'a C,
    content_hash: String,
    wall_time_secs: f64,
    counters: &'a [(String, f64)],
}

/// Write `<dir>/<experiment>_meta.json`. The wall time field varies between
/// runs by design; data CSVs are the determinism surface.
pub fn write_sidecar<C: Serialize>(
    dir: &Path,
    experiment: &str,
    config: &C,
    wall_time_secs: f64,
    counters: &[(String, f64)],
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let config_bytes = serde_json::to_vec(config).map_err(|e| {
        crate::error::CoxError::Config(format!("config serialization failed: {e}"))
    })?;
    let sidecar = Sidecar {
        experiment,
        config,
        content_hash: content_hash(&config_bytes),
        wall_time_secs,
        counters,
    };
    let path = dir.join(format!("{experiment}_meta.json"));
    let mut f = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, &sidecar)
        .map_err(|e| crate::error::CoxError::Config(format!("sidecar write failed: {e}")))?;
    writeln!(f)?;
    Ok(path)
}

/// Emit a ready-to-run gnuplot script next to the CSV artifacts.
pub fn write_gnuplot(dir: &Path, name: &str, script: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, script)?;
    Ok(path)
}

/// Compact float formatting for CSV cells.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        let h1 = content_hash(b"abc");
        let h2 = content_hash(b"abc");
        assert_eq!(h1, h2);
        assert!(h1.starts_with("sha256:"));
        assert_ne!(content_hash(b"abcd"), h1);
    }
}
