//! Field snapshots: flat binary of little-endian complex64 samples (f32 pairs,
//! re then im) with a sidecar text header carrying the grid metadata, the
//! time stamp, and arbitrary problem parameters.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::CoreError;
use crate::grid::{Field, Grid};
use crate::Result;

/// Write `<base>.bin` and `<base>.txt` into `dir`; returns the binary path.
pub fn write_snapshot(
    dir: &Path,
    base: &str,
    field: &Field,
    t: f64,
    params: &[(String, String)],
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let bin_path = dir.join(format!("{base}.bin"));
    let mut bin = Vec::with_capacity(field.values().len() * 8);
    for z in field.values() {
        bin.extend_from_slice(&(z.re as f32).to_le_bytes());
        bin.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    fs::write(&bin_path, bin)?;

    let grid = field.grid();
    let mut header = String::new();
    header.push_str("format = complex64-le\n");
    header.push_str(&format!("dim = {}\n", grid.dim()));
    header.push_str(&format!("points_per_axis = {}\n", grid.points_per_axis()));
    header.push_str(&format!("box_length = {:.16e}\n", grid.box_length()));
    header.push_str(&format!("time = {:.16e}\n", t));
    for (k, v) in params {
        header.push_str(&format!("{k} = {v}\n"));
    }
    let mut txt = fs::File::create(dir.join(format!("{base}.txt")))?;
    txt.write_all(header.as_bytes())?;
    Ok(bin_path)
}

/// Read a snapshot back from its `.bin` path (the sidecar is looked up by
/// swapping the extension). Returns the field, the stamp time, and the
/// parameter lines that were not grid metadata.
pub fn read_snapshot(bin_path: &Path) -> Result<(Field, f64, Vec<(String, String)>)> {
    let sidecar = bin_path.with_extension("txt");
    let text = fs::read_to_string(&sidecar)?;
    let mut dim = None;
    let mut n = None;
    let mut len = None;
    let mut time = None;
    let mut params = Vec::new();
    for line in text.lines() {
        let Some((k, v)) = line.split_once('=') else {
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "format" => {
                if v != "complex64-le" {
                    return Err(CoreError::SnapshotFormat(format!("unknown format {v}")));
                }
            }
            "dim" => dim = v.parse::<usize>().ok(),
            "points_per_axis" => n = v.parse::<usize>().ok(),
            "box_length" => len = v.parse::<f64>().ok(),
            "time" => time = v.parse::<f64>().ok(),
            _ => params.push((k.to_string(), v.to_string())),
        }
    }
    let (Some(dim), Some(n), Some(len), Some(time)) = (dim, n, len, time) else {
        return Err(CoreError::SnapshotFormat(
            "sidecar missing grid metadata".into(),
        ));
    };
    let grid = Grid::new(dim, n, len)?;
    let bytes = fs::read(bin_path)?;
    if bytes.len() != grid.size() * 8 {
        return Err(CoreError::SnapshotFormat(format!(
            "binary size {} does not match grid size {}",
            bytes.len(),
            grid.size() * 8
        )));
    }
    let mut values = Vec::with_capacity(grid.size());
    for chunk in bytes.chunks_exact(8) {
        let re = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64;
        let im = f32::from_le_bytes([chunk[4], chunk[5], chunk[6], chunk[7]]) as f64;
        values.push(Complex64::new(re, im));
    }
    Ok((Field::new(grid, values)?, time, params))
}
