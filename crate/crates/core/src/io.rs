//! Output files: CSV arrays with 17 significant digits, pretty JSON, and
//! the SHA-256 manifest.

use crate::error::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// `1.2345678901234567e0` style, round-trippable.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header and rows of floats.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt17(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a float CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| crate::Error::Numerical(format!("{}: bad float {f:?}: {e}", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ManifestEntry {
    /// path relative to the output directory
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

/// Checksums of `files` (relative to `root`).
pub fn manifest(root: &Path, files: &[PathBuf]) -> Result<Vec<ManifestEntry>> {
    files
        .iter()
        .map(|rel| {
            let full = root.join(rel);
            Ok(ManifestEntry { path: rel.clone(), sha256: sha256_hex(&full)?, bytes: fs::metadata(&full)?.len() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let rows = vec![vec![0.1, -1.0 / 3.0, 1e-300], vec![f64::MAX, 2.5e-17, -0.0]];
        write_csv(&p, &["x", "y", "z"], rows.clone()).unwrap();
        let (h, back) = read_csv(&p).unwrap();
        assert_eq!(h, vec!["x", "y", "z"]);
        for (a, b) in rows.iter().flatten().zip(back.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sha256_of_known_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(sha256_hex(&p).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
