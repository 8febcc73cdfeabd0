//! On-disk field format shared by frame series, velocity/current fields and
//! polar fields.
//!
//! A field directory holds `manifest.json` and one binary record per time
//! stamp. Records are little-endian IEEE-754 doubles in row-major grid order
//! (axis 0 slowest). Complex records interleave `re, im` per point; real
//! vector records store each component as a contiguous block, component 0
//! first. Masked (undefined) real values are written as NaN.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::state::PhysicalParams;

pub const FORMAT_NAME: &str = "pilot-wave-field";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Complex,
    RealVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldManifest {
    pub format: String,
    pub version: u32,
    pub kind: FieldKind,
    pub component_names: Vec<String>,
    pub grid: GridSpec,
    pub params: PhysicalParams,
    pub times: Vec<f64>,
    pub records: Vec<String>,
}

impl FieldManifest {
    pub fn new(kind: FieldKind, component_names: Vec<String>, grid: GridSpec, params: PhysicalParams) -> Self {
        Self {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            kind,
            component_names,
            grid,
            params,
            times: Vec::new(),
            records: Vec::new(),
        }
    }

    fn points(&self) -> usize {
        self.grid.axes.iter().map(|a| a.points).product()
    }

    /// Number of doubles in one record.
    pub fn record_len(&self) -> usize {
        match self.kind {
            FieldKind::Complex => 2 * self.points() * self.component_names.len().max(1),
            FieldKind::RealVector => self.points() * self.component_names.len(),
        }
    }
}

pub fn record_name(i: usize) -> String {
    format!("record_{i:05}.bin")
}

/// Incremental writer for a field directory.
pub struct FieldWriter {
    dir: PathBuf,
    manifest: FieldManifest,
}

impl FieldWriter {
    pub fn create(dir: &Path, manifest: FieldManifest) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), manifest })
    }

    pub fn push_complex(&mut self, time: f64, data: &[C64]) -> Result<PathBuf> {
        let flat: Vec<f64> = data.iter().flat_map(|z| [z.re, z.im]).collect();
        self.push(time, &flat)
    }

    pub fn push_real(&mut self, time: f64, components: &[&[f64]]) -> Result<PathBuf> {
        let flat: Vec<f64> = components.iter().flat_map(|c| c.iter().copied()).collect();
        self.push(time, &flat)
    }

    fn push(&mut self, time: f64, values: &[f64]) -> Result<PathBuf> {
        if values.len() != self.manifest.record_len() {
            return Err(Error::ShapeMismatch(format!(
                "record of {} doubles, manifest expects {}",
                values.len(),
                self.manifest.record_len()
            )));
        }
        let name = record_name(self.manifest.records.len());
        let path = self.dir.join(&name);
        write_doubles(&path, values)?;
        self.manifest.times.push(time);
        self.manifest.records.push(name);
        Ok(path)
    }

    pub fn finish(self) -> Result<PathBuf> {
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&self.manifest)?)?;
        Ok(path)
    }
}

pub fn write_doubles(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_doubles(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::with_capacity(expected * 8);
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() != expected * 8 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("{} bytes, expected {}", bytes.len(), expected * 8),
        });
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn read_manifest(dir: &Path) -> Result<FieldManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|_| Error::MissingArtifact(path.clone()))?;
    let m: FieldManifest = serde_json::from_str(&text)?;
    if m.format != FORMAT_NAME || m.version != FORMAT_VERSION {
        return Err(Error::Format { path, message: format!("unsupported format {} v{}", m.format, m.version) });
    }
    if m.times.len() != m.records.len() {
        return Err(Error::Format { path, message: "times and records differ in length".into() });
    }
    Ok(m)
}

pub fn read_complex_record(dir: &Path, manifest: &FieldManifest, i: usize) -> Result<Vec<C64>> {
    let values = read_doubles(&dir.join(&manifest.records[i]), manifest.record_len())?;
    Ok(values.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect())
}

/// Components of a real vector record.
pub fn read_real_record(dir: &Path, manifest: &FieldManifest, i: usize) -> Result<Vec<Vec<f64>>> {
    let values = read_doubles(&dir.join(&manifest.records[i]), manifest.record_len())?;
    let n = manifest.points();
    Ok(values.chunks_exact(n).map(|c| c.to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_record_layout_is_interleaved_little_endian() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::cube(1, 0.0, 1.0, 16);
        let m = FieldManifest::new(FieldKind::Complex, vec!["psi".into()], grid, PhysicalParams::natural(1));
        let mut w = FieldWriter::create(dir.path(), m).unwrap();
        let data: Vec<C64> = (0..16).map(|i| C64::new(i as f64, -0.5 * i as f64)).collect();
        let path = w.push_complex(0.25, &data).unwrap();
        w.finish().unwrap();
        let bytes = fs::read(path).unwrap();
        assert_eq!(bytes.len(), 16 * 16);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), -0.5);
        let m = read_manifest(dir.path()).unwrap();
        assert_eq!(m.times, vec![0.25]);
        assert_eq!(read_complex_record(dir.path(), &m, 0).unwrap(), data);
    }

    #[test]
    fn real_vector_components_are_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::cube(1, 0.0, 1.0, 16);
        let m = FieldManifest::new(FieldKind::RealVector, vec!["vx".into(), "vy".into()], grid, PhysicalParams::natural(1));
        let mut w = FieldWriter::create(dir.path(), m).unwrap();
        let a = vec![1.0; 16];
        let b = vec![f64::NAN; 16];
        assert!(w.push_real(0.0, &[&a]).is_err());
        w.push_real(0.0, &[&a, &b]).unwrap();
        w.finish().unwrap();
        let m = read_manifest(dir.path()).unwrap();
        let rec = read_real_record(dir.path(), &m, 0).unwrap();
        assert_eq!(rec[0], a);
        assert!(rec[1].iter().all(|v| v.is_nan()));
    }
}
