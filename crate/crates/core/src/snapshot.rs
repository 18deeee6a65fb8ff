//! On-disk layout for wavefunctions and evolution records.
//!
//! A snapshot file is the raw amplitude array: for each cell in row-major
//! order, the real part then the imaginary part, each a little-endian IEEE-754
//! `f64` (16 bytes per cell, no header). A record directory holds
//! `metadata.json` plus `snapshot_00000.bin`, `snapshot_00001.bin`, ...

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::PotentialKind;
use crate::propagate::EvolutionRecord;
use crate::wave::WaveFunction;

pub const RECORD_FORMAT: &str = "qpast-evolution-record";
pub const RECORD_VERSION: u32 = 1;
pub const CONVENTION: &str = "psi(t) = exp(-iHt) psi(0); hbar = 1; H = p^2/2m + V(x)";

pub fn write_snapshot(path: &Path, psi: &WaveFunction) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for z in psi.amplitudes() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path, grid: &Grid, time: f64) -> Result<WaveFunction> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() != grid.len() * 16 {
        return Err(Error::Precondition(format!(
            "{}: expected {} bytes, found {}",
            path.display(),
            grid.len() * 16,
            bytes.len()
        )));
    }
    let amps = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    WaveFunction::from_amplitudes(grid.clone(), amps, time)
}

#[derive(Serialize, Deserialize)]
struct SnapshotEntry {
    index: usize,
    time: f64,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct RecordMetadata {
    format: String,
    version: u32,
    convention: String,
    grid: Grid,
    dt: f64,
    stride: usize,
    mass: f64,
    potential: PotentialKind,
    absorbing: bool,
    snapshots: Vec<SnapshotEntry>,
}

pub fn snapshot_file_name(index: usize) -> String {
    format!("snapshot_{index:05}.bin")
}

/// Writes `record` into `dir` (created if needed).
pub fn save_record(dir: &Path, record: &EvolutionRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(record.snapshots.len());
    for (i, psi) in record.snapshots.iter().enumerate() {
        let file = snapshot_file_name(i);
        write_snapshot(&dir.join(&file), psi)?;
        entries.push(SnapshotEntry {
            index: i,
            time: psi.time(),
            file,
        });
    }
    let meta = RecordMetadata {
        format: RECORD_FORMAT.into(),
        version: RECORD_VERSION,
        convention: CONVENTION.into(),
        grid: record.first().grid().clone(),
        dt: record.dt,
        stride: record.stride,
        mass: record.mass,
        potential: record.potential.clone(),
        absorbing: record.absorbing,
        snapshots: entries,
    };
    let mut json = serde_json::to_string_pretty(&meta)?;
    json.push('\n');
    fs::write(dir.join("metadata.json"), json)?;
    Ok(())
}

pub fn load_record(dir: &Path) -> Result<EvolutionRecord> {
    let meta: RecordMetadata = serde_json::from_slice(&fs::read(dir.join("metadata.json"))?)?;
    if meta.format != RECORD_FORMAT || meta.version != RECORD_VERSION {
        return Err(Error::Precondition(format!(
            "unsupported record format {} v{}",
            meta.format, meta.version
        )));
    }
    let snapshots = meta
        .snapshots
        .iter()
        .map(|e| read_snapshot(&dir.join(&e.file), &meta.grid, e.time))
        .collect::<Result<Vec<_>>>()?;
    if snapshots.is_empty() {
        return Err(Error::Precondition("record has no snapshots".into()));
    }
    Ok(EvolutionRecord {
        snapshots,
        dt: meta.dt,
        stride: meta.stride,
        potential: meta.potential,
        mass: meta.mass,
        absorbing: meta.absorbing,
    })
}
