//! Output formats: P6 pixmaps, CSV with fixed significant digits, JSON
//! manifests, and atomic writes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::CliError;

/// CSV layout version, recorded in every manifest.
pub const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// row-major RGB
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image { width, height, pixels: vec![[0; 3]; width * height] }
    }

    /// Binary portable pixmap: `P6`, dimensions, max value 255, RGB rows top to bottom.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }
}

/// Reads back a pixmap written by [`Image::to_ppm`].
pub fn parse_ppm(bytes: &[u8]) -> Option<Image> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return None;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?.to_string());
    }
    if fields[0] != "P6" || fields[3] != "255" {
        return None;
    }
    let (w, h): (usize, usize) = (fields[1].parse().ok()?, fields[2].parse().ok()?);
    let data = bytes.get(pos + 1..)?;
    if data.len() != w * h * 3 {
        return None;
    }
    Some(Image { width: w, height: h, pixels: data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect() })
}

/// Fixed 12 significant digits, scientific, locale independent.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub wall_time_s: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub palette: BTreeMap<String, String>,
    pub csv_version: u32,
    pub summary: serde_json::Value,
    pub outputs: Vec<OutputFile>,
}

/// Writes every output atomically and returns their manifest entries, sorted by name.
pub fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<OutputFile>, CliError> {
    let mut entries = Vec::new();
    for (name, bytes) in files {
        let path: PathBuf = dir.join(name);
        write_atomic(&path, bytes)?;
        entries.push(OutputFile { file: name.clone(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
    }
    entries.sort_by(|a, b| a.file.cmp(&b.file));
    Ok(entries)
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(io_err)?;
    out.push(b'\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_layout() {
        let mut img = Image::new(2, 1);
        img.pixels[1] = [1, 2, 3];
        let bytes = img.to_ppm();
        assert_eq!(&bytes[..11], b"P6\n2 1\n255\n");
        assert_eq!(&bytes[11..], &[0, 0, 0, 1, 2, 3]);
        assert_eq!(parse_ppm(&bytes), Some(img));
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(num(0.63092975357), "6.30929753570e-1");
    }

    #[test]
    fn csv_has_header() {
        let b = csv_bytes(&["x", "y"], &[vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), "x,y\n1,2\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("f.bin");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
