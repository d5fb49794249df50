//! Binary field snapshots.
//!
//! Layout (little endian): magic `FDRC`, version `u32`, `dim u32`, `n u32`,
//! `box_length f64`, `time f64`, then `4 n^dim` complex values as `(re, im)`
//! `f64` pairs in component-major order.

use std::io::{Read, Write};
use std::path::Path;

use crate::field::{Grid, SpinorField};
use crate::{Error, Result, C64};

pub const MAGIC: &[u8; 4] = b"FDRC";
pub const VERSION: u32 = 1;

pub fn write_to(f: &SpinorField, w: &mut impl Write) -> Result<()> {
    let g = f.grid();
    let dim =
        u32::try_from(g.dim).map_err(|_| Error::Snapshot("dim does not fit in u32".into()))?;
    let n = u32::try_from(g.n).map_err(|_| Error::Snapshot("n does not fit in u32".into()))?;
    let mut buf = Vec::with_capacity(32 + 16 * f.data().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&dim.to_le_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&g.box_length.to_le_bytes());
    buf.extend_from_slice(&f.time.to_le_bytes());
    for v in f.data() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_from(r: &mut impl Read) -> Result<SpinorField> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 32 || &bytes[..4] != MAGIC {
        return Err(Error::Snapshot("missing FDRC header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let grid = Grid::new(u32_at(8) as usize, u32_at(12) as usize, f64_at(16))?;
    let time = f64_at(24);
    let count = 4 * grid.points();
    if bytes.len() != 32 + 16 * count {
        return Err(Error::Snapshot(format!(
            "expected {} payload bytes, found {}",
            16 * count,
            bytes.len() - 32
        )));
    }
    let data = (0..count)
        .map(|i| C64::new(f64_at(32 + 16 * i), f64_at(40 + 16 * i)))
        .collect();
    SpinorField::new(grid, data, time)
}

pub fn save(f: &SpinorField, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_to(f, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SpinorField> {
    read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}
