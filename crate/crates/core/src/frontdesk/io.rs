//! File formats.
//!
//! Sampled fields and coefficient arrays are one file each: a single-line
//! JSON header followed by the samples, either as CSV `re,im` rows (after a
//! `re,im` title row) or as little-endian `f64` pairs. A Gramian field is a
//! JSON index next to a binary file of `r × s` row-major blocks, one per
//! node. Spectral profiles are CSV `node,lambda_1,…,lambda_r,rank`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiberization::{FrequencyGrid, GramianField, SpectralProfile};
use crate::mixed_norms::{CoefficientArray, Decay, Grid, IBox, SampledField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Csv,
    Binary,
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    format: String,
    version: u32,
    grid: Grid,
    bbox: IBox,
    decay: Decay,
    encoding: Encoding,
    count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoefficientHeader {
    format: String,
    version: u32,
    d: usize,
    offset: Vec<i64>,
    shape: Vec<usize>,
    encoding: Encoding,
    count: usize,
}

fn write_samples(w: &mut impl Write, values: &[Complex64], enc: Encoding) -> Result<()> {
    match enc {
        Encoding::Csv => {
            writeln!(w, "re,im")?;
            for v in values {
                // `{:?}` prints the shortest string that round-trips.
                writeln!(w, "{:?},{:?}", v.re, v.im)?;
            }
        }
        Encoding::Binary => {
            for v in values {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_samples(r: &mut impl BufRead, count: usize, enc: Encoding) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(count);
    match enc {
        Encoding::Csv => {
            let mut lines = r.lines();
            match lines.next() {
                Some(Ok(t)) if t.trim() == "re,im" => {}
                _ => return Err(Error::Invalid("missing `re,im` title row".into())),
            }
            for line in lines {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let (a, b) = line
                    .split_once(',')
                    .ok_or_else(|| Error::Invalid(format!("bad sample row `{line}`")))?;
                let parse = |t: &str| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Invalid(format!("bad number `{t}`")))
                };
                out.push(Complex64::new(parse(a)?, parse(b)?));
            }
        }
        Encoding::Binary => {
            let mut buf = Vec::new();
            r.read_to_end(&mut buf)?;
            if buf.len() != 16 * count {
                return Err(Error::Invalid(format!("expected {} payload bytes, got {}", 16 * count, buf.len())));
            }
            for c in buf.chunks_exact(16) {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                out.push(Complex64::new(re, im));
            }
        }
    }
    if out.len() != count {
        return Err(Error::Invalid(format!("expected {count} samples, got {}", out.len())));
    }
    Ok(out)
}

fn read_header<T: for<'de> Deserialize<'de>>(r: &mut impl BufRead, format: &str) -> Result<T> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let value: serde_json::Value = serde_json::from_str(&line)?;
    if value.get("format").and_then(|f| f.as_str()) != Some(format) {
        return Err(Error::Invalid(format!("not a `{format}` file")));
    }
    Ok(serde_json::from_value(value)?)
}

pub fn write_field_to(w: &mut impl Write, f: &SampledField, enc: Encoding) -> Result<()> {
    let header = FieldHeader {
        format: "sampled_field".into(),
        version: 1,
        grid: f.grid(),
        bbox: f.bbox().clone(),
        decay: f.decay(),
        encoding: enc,
        count: f.values().len(),
    };
    serde_json::to_writer(&mut *w, &header)?;
    writeln!(w)?;
    write_samples(w, f.values(), enc)
}

pub fn read_field_from(r: &mut impl BufRead) -> Result<SampledField> {
    let h: FieldHeader = read_header(r, "sampled_field")?;
    let values = read_samples(r, h.count, h.encoding)?;
    SampledField::new(h.grid, h.bbox, values, h.decay)
}

pub fn write_field(path: &Path, f: &SampledField, enc: Encoding) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field_to(&mut w, f, enc)?;
    Ok(w.flush()?)
}

pub fn read_field(path: &Path) -> Result<SampledField> {
    read_field_from(&mut BufReader::new(File::open(path)?))
}

pub fn write_coefficients_to(w: &mut impl Write, c: &CoefficientArray, enc: Encoding) -> Result<()> {
    let header = CoefficientHeader {
        format: "coefficients".into(),
        version: 1,
        d: c.d,
        offset: c.offset.clone(),
        shape: c.shape.clone(),
        encoding: enc,
        count: c.data.len(),
    };
    serde_json::to_writer(&mut *w, &header)?;
    writeln!(w)?;
    write_samples(w, &c.data, enc)
}

pub fn read_coefficients_from(r: &mut impl BufRead) -> Result<CoefficientArray> {
    let h: CoefficientHeader = read_header(r, "coefficients")?;
    let data = read_samples(r, h.count, h.encoding)?;
    CoefficientArray::new(h.d, h.offset, h.shape, data)
}

pub fn write_coefficients(path: &Path, c: &CoefficientArray, enc: Encoding) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_coefficients_to(&mut w, c, enc)?;
    Ok(w.flush()?)
}

pub fn read_coefficients(path: &Path) -> Result<CoefficientArray> {
    read_coefficients_from(&mut BufReader::new(File::open(path)?))
}

#[derive(Debug, Serialize, Deserialize)]
struct GramianIndex {
    format: String,
    version: u32,
    freq: FrequencyGrid,
    r: usize,
    s: usize,
    tail_bound: f64,
    nodes: usize,
    /// Binary file name, relative to the index.
    blocks: String,
}

/// Path of the block file that belongs to an index path.
pub fn gramian_blocks_path(index: &Path) -> PathBuf {
    index.with_extension("blocks.bin")
}

pub fn write_gramian(index: &Path, g: &GramianField) -> Result<()> {
    let blocks = gramian_blocks_path(index);
    let name = blocks
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Invalid(format!("bad path {}", index.display())))?
        .to_string();
    let meta = GramianIndex {
        format: "gramian".into(),
        version: 1,
        freq: g.freq,
        r: g.r,
        s: g.s,
        tail_bound: g.tail_bound,
        nodes: g.fibers.len(),
        blocks: name,
    };
    std::fs::write(index, serde_json::to_string_pretty(&meta)?)?;
    let mut w = BufWriter::new(File::create(blocks)?);
    for f in &g.fibers {
        for i in 0..g.r {
            for k in 0..g.s {
                let v = f[(i, k)];
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    Ok(w.flush()?)
}

pub fn read_gramian(index: &Path) -> Result<GramianField> {
    let meta: GramianIndex = serde_json::from_str(&std::fs::read_to_string(index)?)?;
    if meta.format != "gramian" {
        return Err(Error::Invalid(format!("{} is not a gramian index", index.display())));
    }
    if meta.nodes != meta.freq.len() {
        return Err(Error::Invalid(format!(
            "index lists {} nodes, the grid has {}",
            meta.nodes,
            meta.freq.len()
        )));
    }
    let path = index.parent().unwrap_or(Path::new(".")).join(&meta.blocks);
    let mut reader = BufReader::new(File::open(path)?);
    let values = read_samples(&mut reader, meta.nodes * meta.r * meta.s, Encoding::Binary)?;
    let fibers = values
        .chunks_exact(meta.r * meta.s)
        .map(|c| DMatrix::from_row_slice(meta.r, meta.s, c))
        .collect();
    Ok(GramianField {
        freq: meta.freq,
        r: meta.r,
        s: meta.s,
        fibers,
        tail_bound: meta.tail_bound,
    })
}

pub fn write_spectral_csv(w: &mut impl Write, s: &SpectralProfile) -> Result<()> {
    let r = s.eigenvalues.first().map_or(0, |v| v.len());
    let mut title = vec!["node".to_string()];
    title.extend((1..=r).map(|k| format!("lambda_{k}")));
    title.push("rank".into());
    writeln!(w, "{}", title.join(","))?;
    for (node, (values, rank)) in s.eigenvalues.iter().zip(&s.k_per_fiber).enumerate() {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{node},{},{rank}", cells.join(","))?;
    }
    Ok(())
}
