//! Field dumps: the binary `RSF1` layout and a `t1,t2,value` CSV.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::grid::Grid;

const MAGIC: &[u8; 4] = b"RSF1";

/// How a dumped grid was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimMode {
    FilteredDirect = 0,
    Anchored = 1,
    MaternDirect = 2,
    Jittered = 3,
}

impl SimMode {
    fn from_code(c: u64) -> Result<Self> {
        Ok(match c {
            0 => SimMode::FilteredDirect,
            1 => SimMode::Anchored,
            2 => SimMode::MaternDirect,
            3 => SimMode::Jittered,
            _ => return Err(Error::Format(format!("unknown simulation mode code {c}"))),
        })
    }
}

/// Header fields of an `RSF1` dump. `n` is the lattice side; filtered-direct
/// dumps hold the `(n − m)²` filtered values, all others `n²` field values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DumpHeader {
    pub n: u64,
    pub m: u64,
    pub mode: SimMode,
    pub seed: u64,
}

impl DumpHeader {
    pub fn grid_side(&self) -> Result<usize> {
        match self.mode {
            SimMode::FilteredDirect if self.m >= self.n => {
                Err(Error::Format(format!("order {} not below side {}", self.m, self.n)))
            }
            SimMode::FilteredDirect => Ok((self.n - self.m) as usize),
            _ => Ok(self.n as usize),
        }
    }
}

pub fn write_rsf1(mut w: impl Write, header: &DumpHeader, grid: &Grid) -> Result<()> {
    if header.grid_side()? != grid.side() {
        return Err(Error::Format("header does not match grid side".into()));
    }
    w.write_all(MAGIC)?;
    for v in [header.n, header.m, header.mode as u64, header.seed] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in grid.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_rsf1(mut r: impl Read) -> Result<(DumpHeader, Grid)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("missing RSF1 magic".into()));
    }
    let mut word = [0u8; 8];
    let mut next = |r: &mut dyn Read| -> Result<u64> {
        r.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word))
    };
    let n = next(&mut r)?;
    let m = next(&mut r)?;
    let mode = SimMode::from_code(next(&mut r)?)?;
    let seed = next(&mut r)?;
    let header = DumpHeader { n, m, mode, seed };
    let side = header.grid_side()?;
    let mut data = Vec::with_capacity(side * side);
    for _ in 0..side * side {
        data.push(f64::from_bits(next(&mut r)?));
    }
    Ok((header, Grid::new(side, data)?))
}

pub fn write_csv(mut w: impl Write, grid: &Grid) -> Result<()> {
    writeln!(w, "t1,t2,value")?;
    for t1 in 0..grid.side() {
        for t2 in 0..grid.side() {
            writeln!(w, "{t1},{t2},{:?}", grid.get(t1, t2))?;
        }
    }
    Ok(())
}

/// Reads a `t1,t2,value` CSV covering a full square lattice.
pub fn read_csv(r: impl BufRead) -> Result<Grid> {
    let mut entries = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("t1")) {
            continue;
        }
        let bad = || Error::Format(format!("line {}: expected t1,t2,value", i + 1));
        let mut it = line.split(',');
        let t1: usize = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let t2: usize = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let v: f64 = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        if it.next().is_some() {
            return Err(bad());
        }
        entries.push((t1, t2, v));
    }
    let side = (entries.len() as f64).sqrt().round() as usize;
    if side * side != entries.len() {
        return Err(Error::Format(format!("{} entries do not form a square lattice", entries.len())));
    }
    let mut g = Grid::zeros(side);
    let mut seen = vec![false; side * side];
    for (t1, t2, v) in entries {
        if t1 >= side || t2 >= side || seen[t1 * side + t2] {
            return Err(Error::Format(format!("site ({t1},{t2}) out of range or repeated")));
        }
        seen[t1 * side + t2] = true;
        g.set(t1, t2, v);
    }
    Ok(g)
}
