//! Flat binary layout for fields: magic, header length, JSON header, then
//! little-endian `f64` values in row-major lattice order.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::field::{ScalarField, VectorField};
use super::grid::{Grid, NodeKind};
use crate::error::{LakeError, Result};

const MAGIC: &[u8; 8] = b"LAKEFLD1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub name: String,
    pub time: f64,
    pub h: f64,
    pub bbox: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub components: usize,
    /// Runs of `[kind, count]` with kind 0 = interior, 1 = boundary, 2 = exterior.
    pub mask_rle: Vec<[usize; 2]>,
}

fn kind_code(k: NodeKind) -> usize {
    match k {
        NodeKind::Interior => 0,
        NodeKind::Boundary => 1,
        NodeKind::Exterior => 2,
    }
}

pub fn mask_rle(grid: &Grid) -> Vec<[usize; 2]> {
    let mut runs: Vec<[usize; 2]> = Vec::new();
    for &k in grid.kinds() {
        let c = kind_code(k);
        match runs.last_mut() {
            Some(r) if r[0] == c => r[1] += 1,
            _ => runs.push([c, 1]),
        }
    }
    runs
}

fn header_for(grid: &Grid, name: &str, time: f64, components: usize) -> FieldHeader {
    FieldHeader {
        name: name.to_string(),
        time,
        h: grid.h(),
        bbox: grid.lattice_bbox(),
        nx: grid.nx(),
        ny: grid.ny(),
        components,
        mask_rle: mask_rle(grid),
    }
}

fn write_raw(mut w: impl Write, header: &FieldHeader, values: &[f64]) -> Result<()> {
    let json = serde_json::to_vec(header).map_err(|e| LakeError::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a header and its values without reference to a grid.
pub fn read_raw(mut r: impl Read) -> Result<(FieldHeader, Vec<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LakeError::Format("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: FieldHeader =
        serde_json::from_slice(&json).map_err(|e| LakeError::Format(e.to_string()))?;
    let count = header.nx * header.ny * header.components;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(LakeError::Format(format!(
            "expected {} values, found {} bytes",
            count,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, values))
}

fn check_header(grid: &Grid, header: &FieldHeader, components: usize) -> Result<()> {
    if header.components != components
        || header.nx != grid.nx()
        || header.ny != grid.ny()
        || header.h != grid.h()
        || header.mask_rle != mask_rle(grid)
    {
        return Err(LakeError::GridMismatch);
    }
    Ok(())
}

pub fn write_scalar(path: &Path, field: &ScalarField) -> Result<()> {
    let header = header_for(field.grid(), &field.name, field.time, 1);
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_raw(file, &header, field.values())
}

pub fn write_vector(path: &Path, field: &VectorField) -> Result<()> {
    let header = header_for(field.grid(), &field.name, field.time, 2);
    let flat: Vec<f64> = field.values().iter().flat_map(|v| [v[0], v[1]]).collect();
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_raw(file, &header, &flat)
}

pub fn read_scalar(path: &Path, grid: &Arc<Grid>) -> Result<ScalarField> {
    let (header, values) = read_raw(std::io::BufReader::new(std::fs::File::open(path)?))?;
    check_header(grid, &header, 1)?;
    Ok(ScalarField::from_lattice(grid, &header.name, values)?.with_time(header.time))
}

pub fn read_vector(path: &Path, grid: &Arc<Grid>) -> Result<VectorField> {
    let (header, values) = read_raw(std::io::BufReader::new(std::fs::File::open(path)?))?;
    check_header(grid, &header, 2)?;
    let mut out = VectorField::zeros(grid, &header.name).with_time(header.time);
    for (i, &k) in grid.interior().iter().enumerate() {
        out.set(i, [values[2 * k], values[2 * k + 1]]);
    }
    Ok(out)
}
