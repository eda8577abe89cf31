//! File writers for run outputs. Every file written through an
//! [`OutputWriter`] is checksummed; on failure the writer removes what it
//! created so a directory never holds a half-finished run.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A CSV cell. Floats are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    /// Written as an empty field.
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

pub fn render_csv(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Binary greymap (P5) of a row-major `height x width` field, min-max
/// scaled to 0..=255. A constant field maps to 0.
pub fn render_pgm(values: &[f64], height: usize, width: usize) -> (Vec<u8>, PgmScale) {
    assert_eq!(values.len(), height * width);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if span > 0.0 {
            ((v - min) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    (
        out,
        PgmScale {
            file: String::new(),
            width,
            height,
            min,
            max,
        },
    )
}

/// Parse a P5 header; returns (width, height, maxval, pixel data).
pub fn parse_pgm(bytes: &[u8]) -> Option<(usize, usize, u32, &[u8])> {
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
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
    }
    if fields[0] != "P5" {
        return None;
    }
    let data = bytes.get(pos + 1..)?;
    Some((
        fields[1].parse().ok()?,
        fields[2].parse().ok()?,
        fields[3].parse().ok()?,
        data,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgmScale {
    pub file: String,
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct OutputWriter {
    dir: PathBuf,
    records: Vec<OutputRecord>,
    scales: Vec<PgmScale>,
}

impl OutputWriter {
    /// Create `dir` if needed and check that it accepts files.
    pub fn prepare(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let probe = dir.join(".write-test");
        fs::File::create(&probe)?.write_all(b"ok")?;
        fs::remove_file(&probe)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            records: Vec::new(),
            scales: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    pub fn scales(&self) -> &[PgmScale] {
        &self.scales
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Err(e) = fs::write(&path, data) {
            let _ = fs::remove_file(&path);
            self.cleanup();
            return Err(Error::Io(e));
        }
        self.records.push(OutputRecord {
            file: name.to_string(),
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        self.bytes(name, render_csv(header, rows).as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    pub fn pgm(&mut self, name: &str, values: &[f64], height: usize, width: usize) -> Result<()> {
        let (data, mut scale) = render_pgm(values, height, width);
        self.bytes(name, &data)?;
        scale.file = name.to_string();
        self.scales.push(scale);
        Ok(())
    }

    /// Remove every file written so far.
    pub fn cleanup(&mut self) {
        for rec in self.records.drain(..) {
            let _ = fs::remove_file(self.dir.join(&rec.file));
        }
        self.scales.clear();
    }
}
