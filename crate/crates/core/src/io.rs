//! File formats: a flat binary container for field checkpoints and the
//! CSV tables the experiment tools emit.
//!
//! The container layout (all integers little-endian) is
//! `magic "EPFB" | version u32 | nx u32 | ny u32 | lx f64 | ly f64 |
//! ncomp u32 | meta_len u32 | meta (UTF-8) | payload f64...` with the
//! payload stored node-major, row by row, components interleaved.
//! CSV files start with a `# elastophase <kind> v1` version line and
//! optional `#`-prefixed metadata lines; values are written with nine
//! significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::fields::{DeformationField, Grid, PhaseField};
use crate::interfacial::VectorMeasure;
use crate::math::Vec2;
use crate::mm1d::SweepRow;
use crate::phases::DistanceMatrix;

pub const CONTAINER_MAGIC: [u8; 4] = *b"EPFB";
pub const CONTAINER_VERSION: u32 = 1;

/// Upper bound on the embedded metadata block; anything larger is a
/// corrupt or hostile file, not a checkpoint.
const MAX_META_BYTES: u32 = 1 << 24;

fn container_err(msg: impl Into<String>) -> Error {
    Error::Container(msg.into())
}

fn write_container(
    path: &Path,
    grid: Grid,
    ncomp: usize,
    meta: &str,
    data: impl Iterator<Item = f64>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&CONTAINER_MAGIC)?;
    w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    w.write_all(&(grid.nx as u32).to_le_bytes())?;
    w.write_all(&(grid.ny as u32).to_le_bytes())?;
    w.write_all(&grid.lx.to_le_bytes())?;
    w.write_all(&grid.ly.to_le_bytes())?;
    w.write_all(&(ncomp as u32).to_le_bytes())?;
    w.write_all(&(meta.len() as u32).to_le_bytes())?;
    w.write_all(meta.as_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct RawField {
    grid: Grid,
    ncomp: usize,
    meta: String,
    data: Vec<f64>,
}

fn read_container(path: &Path) -> Result<RawField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != CONTAINER_MAGIC {
        return Err(container_err(format!("bad magic {magic:?}")));
    }
    let mut u4 = [0u8; 4];
    let mut u8b = [0u8; 8];
    let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32> {
        r.read_exact(&mut u4)?;
        Ok(u32::from_le_bytes(u4))
    };
    let version = read_u32(&mut r)?;
    if version != CONTAINER_VERSION {
        return Err(container_err(format!("unsupported version {version}")));
    }
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    r.read_exact(&mut u8b)?;
    let lx = f64::from_le_bytes(u8b);
    r.read_exact(&mut u8b)?;
    let ly = f64::from_le_bytes(u8b);
    let mut u4 = [0u8; 4];
    r.read_exact(&mut u4)?;
    let ncomp = u32::from_le_bytes(u4) as usize;
    r.read_exact(&mut u4)?;
    let meta_len = u32::from_le_bytes(u4);
    if meta_len > MAX_META_BYTES {
        return Err(container_err(format!("metadata block of {meta_len} bytes")));
    }
    let mut meta = vec![0u8; meta_len as usize];
    r.read_exact(&mut meta)?;
    let meta = String::from_utf8(meta).map_err(|e| container_err(e.to_string()))?;
    let grid = Grid::new(nx, ny, lx, ly)?;
    let count = grid.num_nodes() * ncomp;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut u8b)?;
        data.push(f64::from_le_bytes(u8b));
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(container_err("trailing bytes after payload"));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(container_err("non-finite value in payload"));
    }
    Ok(RawField {
        grid,
        ncomp,
        meta,
        data,
    })
}

/// Write a deformation checkpoint (two components per node: the
/// deformed position). The Dirichlet mask is not stored; readers get
/// the boundary-constrained default back.
pub fn write_deformation(path: &Path, def: &DeformationField, meta: &str) -> Result<()> {
    write_container(
        path,
        def.grid,
        2,
        meta,
        def.values.iter().flat_map(|v| [v.x, v.y]),
    )
}

pub fn read_deformation(path: &Path) -> Result<(DeformationField, String)> {
    let raw = read_container(path)?;
    if raw.ncomp != 2 {
        return Err(container_err(format!(
            "expected 2 components for a deformation, found {}",
            raw.ncomp
        )));
    }
    let values: Vec<Vec2> = raw.data.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect();
    let dirichlet = (0..raw.grid.num_nodes())
        .map(|idx| raw.grid.is_boundary_node(idx))
        .collect();
    Ok((
        DeformationField {
            grid: raw.grid,
            values,
            dirichlet,
        },
        raw.meta,
    ))
}

pub fn write_phase(path: &Path, z: &PhaseField, meta: &str) -> Result<()> {
    write_container(path, z.grid, z.h, meta, z.values.iter().copied())
}

pub fn read_phase(path: &Path) -> Result<(PhaseField, String)> {
    let raw = read_container(path)?;
    if raw.ncomp == 0 || raw.ncomp > 8 {
        return Err(container_err(format!(
            "implausible phase dimension {}",
            raw.ncomp
        )));
    }
    Ok((
        PhaseField {
            grid: raw.grid,
            h: raw.ncomp,
            values: raw.data,
        },
        raw.meta,
    ))
}

/// Start a CSV file of the given kind: a versioned kind line, then one
/// comment line per metadata entry. The caller writes header and rows.
pub fn open_csv(path: &Path, kind: &str, meta: &[String]) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# elastophase {kind} v1")?;
    for line in meta {
        writeln!(w, "# {line}")?;
    }
    Ok(w)
}

/// Distance matrix as one comma-separated row per phase.
pub fn write_distance_csv(path: &Path, d: &DistanceMatrix, meta: &[String]) -> Result<()> {
    let mut w = open_csv(path, "distance-matrix", meta)?;
    for a in 0..d.size() {
        let row: Vec<String> = (0..d.size()).map(|b| format!("{:.8e}", d.get(a, b))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Sweep table with one row per epsilon.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow], meta: &[String]) -> Result<()> {
    let mut w = open_csv(path, "sweep-table", meta)?;
    writeln!(
        w,
        "epsilon,F_eps_min,F_eps_recovery,F0_sharp,bulk,interface,mass_error,restarts_used,wall_time_s"
    )?;
    for r in rows {
        writeln!(
            w,
            "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{},{:.3e}",
            r.epsilon,
            r.f_eps_min,
            r.f_eps_recovery,
            r.f0_sharp,
            r.bulk,
            r.interface,
            r.mass_error,
            r.restarts_used,
            r.wall_time_s
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Per-iteration optimizer history.
pub fn write_history_csv(path: &Path, history: &[EnergyReport], meta: &[String]) -> Result<()> {
    let diag = |r: &EnergyReport, key: &str| r.diagnostics.get(key).copied().unwrap_or(f64::NAN);
    let mut w = open_csv(path, "history", meta)?;
    writeln!(w, "iter,bulk,interface,total,step_y,step_z,min_det")?;
    for (iter, r) in history.iter().enumerate() {
        writeln!(
            w,
            "{iter},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            r.bulk,
            r.interface,
            r.total,
            diag(r, "step_y"),
            diag(r, "step_z"),
            diag(r, "min_det")
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Interfacial measure atoms, one row per node.
pub fn write_measure_csv(path: &Path, mu: &VectorMeasure, meta: &[String]) -> Result<()> {
    let mut w = open_csv(path, "measure", meta)?;
    writeln!(w, "node,x,y,atom_x,atom_y")?;
    for j in 0..=mu.grid.ny {
        for i in 0..=mu.grid.nx {
            let idx = mu.grid.node_index(i, j);
            let p = mu.grid.node_pos(i, j);
            let a = mu.atoms[idx];
            writeln!(w, "{idx},{:.8e},{:.8e},{:.8e},{:.8e}", p.x, p.y, a.x, a.y)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read back any of the CSV formats above: `#` lines are returned as
/// metadata, a leading non-numeric line becomes the column header, and
/// the rest parse as rows of reals.
pub fn read_csv_table(path: &Path) -> Result<(Vec<String>, Vec<String>, Vec<Vec<f64>>)> {
    let r = BufReader::new(File::open(path)?);
    let mut meta = Vec::new();
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for line in r.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            meta.push(comment.trim().to_string());
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(nums) => rows.push(nums),
            Err(_) if header.is_empty() && rows.is_empty() => {
                header = cells.into_iter().map(str::to_string).collect();
            }
            Err(e) => return Err(container_err(format!("unparsable CSV line {trimmed:?}: {e}"))),
        }
    }
    Ok((meta, header, rows))
}
