//! Binary state snapshots.
//!
//! Layout, all little endian: `"CAOM"`, `u32` version, `u32 ny`, `u32 nz`,
//! `f64` time, `u32` field count, then per field a 16-byte NUL-padded name
//! followed by its `f64` values. `theta` has `ny + 1` values; `q`, `t`, `s`
//! and `psi` have `(ny + 1)(nz + 1)` values with `y` varying fastest.

use std::io::{self, Read, Write};

use caom_core::grid::{Field1D, Field2D, Grid2D};
use caom_core::model::CoupledState;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"CAOM";
pub const VERSION: u32 = 1;
pub const FIELDS: [&str; 5] = ["theta", "q", "t", "s", "psi"];
const TAG_LEN: usize = 16;
const MAX_CELLS: u32 = 1 << 14;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a snapshot file (bad magic)")]
    Magic,
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("bad grid dimensions {0} x {1}")]
    Dims(u32, u32),
    #[error("expected 5 fields, header says {0}")]
    FieldCount(u32),
    #[error("expected field `{expected}`, found `{found}`")]
    Tag { expected: &'static str, found: String },
}

pub fn write_snapshot(w: &mut impl Write, u: &CoupledState) -> io::Result<()> {
    let g = u.q.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.ny() as u32).to_le_bytes())?;
    w.write_all(&(g.nz() as u32).to_le_bytes())?;
    w.write_all(&u.time.to_le_bytes())?;
    w.write_all(&(FIELDS.len() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * g.node_count());
    for name in FIELDS {
        let mut tag = [0u8; TAG_LEN];
        tag[..name.len()].copy_from_slice(name.as_bytes());
        w.write_all(&tag)?;
        buf.clear();
        match name {
            "theta" => u.theta.values.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
            _ => {
                let f = match name {
                    "q" => &u.q,
                    "t" => &u.t_ocean,
                    "s" => &u.s_ocean,
                    _ => &u.psi,
                };
                let (my, mz) = g.shape();
                for j in 0..mz {
                    for i in 0..my {
                        buf.extend_from_slice(&f.values[[i, j]].to_le_bytes());
                    }
                }
            }
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize) -> io::Result<Vec<f64>> {
    let mut b = vec![0u8; 8 * n];
    r.read_exact(&mut b)?;
    Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Reads a snapshot; the header is validated before any field data is read.
pub fn read_snapshot(r: &mut impl Read) -> Result<CoupledState, SnapshotError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::Magic);
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(SnapshotError::Version(version));
    }
    let (ny, nz) = (read_u32(r)?, read_u32(r)?);
    if ny > MAX_CELLS || nz > MAX_CELLS {
        return Err(SnapshotError::Dims(ny, nz));
    }
    let grid = Grid2D::new(ny as usize, nz as usize).map_err(|_| SnapshotError::Dims(ny, nz))?;
    let time = read_f64s(r, 1)?[0];
    let count = read_u32(r)?;
    if count as usize != FIELDS.len() {
        return Err(SnapshotError::FieldCount(count));
    }
    let (my, mz) = grid.shape();
    let mut theta = Field1D::zeros(grid.ny());
    let mut planes = Vec::new();
    for expected in FIELDS {
        let mut tag = [0u8; TAG_LEN];
        r.read_exact(&mut tag)?;
        let found = String::from_utf8_lossy(&tag).trim_end_matches('\0').to_string();
        if found != expected {
            return Err(SnapshotError::Tag { expected, found });
        }
        if expected == "theta" {
            theta = Field1D::from_vec(read_f64s(r, my)?).expect("length checked");
        } else {
            let data = read_f64s(r, my * mz)?;
            let mut f = Field2D::zeros(grid);
            for j in 0..mz {
                for i in 0..my {
                    f.values[[i, j]] = data[j * my + i];
                }
            }
            planes.push(f);
        }
    }
    let psi = planes.pop().unwrap();
    let s_ocean = planes.pop().unwrap();
    let t_ocean = planes.pop().unwrap();
    let q = planes.pop().unwrap();
    Ok(CoupledState { theta, q, t_ocean, s_ocean, psi, time })
}
