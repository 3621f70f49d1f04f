//! Field snapshots as a binary/CSV pair sharing one header.
//!
//! Binary layout (little endian): the 8-byte magic `FSFIELD1`, then `u32`
//! component count, `u32` representation (0 physical, 1 spectral), `u32`
//! modes per dimension, `u32` vertical node count (0 for surface fields),
//! `u32` vertical scheme (0 Chebyshev, 1 finite difference), `f64` box
//! length, `f64` depth, then `(re, im)` pairs in field layout order.
//! The CSV holds the same header as `# key=value` lines followed by rows
//! `component,node,i1,i2,re,im`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use super::field::{HalfSpaceField, Repr, SurfaceField};
use super::grid::{HorizontalGrid, VerticalGrid, VerticalScheme};
use crate::error::{invalid, Error, Result};

const MAGIC: &[u8; 8] = b"FSFIELD1";

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub comps: u32,
    pub repr: Repr,
    pub modes: u32,
    pub vertical_nodes: u32,
    pub scheme: VerticalScheme,
    pub box_len: f64,
    pub depth: f64,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("csv"))
}

fn write_pair(stem: &Path, h: &SnapshotHeader, data: &[Complex64]) -> Result<()> {
    let (bin, csv) = paths(stem);
    let mut b = Vec::with_capacity(48 + 16 * data.len());
    b.extend_from_slice(MAGIC);
    for v in [
        h.comps,
        (h.repr == Repr::Spectral) as u32,
        h.modes,
        h.vertical_nodes,
        (h.scheme == VerticalScheme::FiniteDifference) as u32,
    ] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b.extend_from_slice(&h.box_len.to_le_bytes());
    b.extend_from_slice(&h.depth.to_le_bytes());
    for v in data {
        b.extend_from_slice(&v.re.to_le_bytes());
        b.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(bin, b)?;

    let mut w = std::io::BufWriter::new(fs::File::create(csv)?);
    writeln!(w, "# comps={}", h.comps)?;
    writeln!(w, "# repr={}", if h.repr == Repr::Spectral { "spectral" } else { "physical" })?;
    writeln!(w, "# modes={}", h.modes)?;
    writeln!(w, "# vertical_nodes={}", h.vertical_nodes)?;
    writeln!(
        w,
        "# scheme={}",
        if h.scheme == VerticalScheme::Chebyshev { "chebyshev" } else { "finite-difference" }
    )?;
    writeln!(w, "# box_len={:e}", h.box_len)?;
    writeln!(w, "# depth={:e}", h.depth)?;
    writeln!(w, "component,node,i1,i2,re,im")?;
    let n = h.modes as usize;
    let nz = (h.vertical_nodes as usize).max(1);
    for (idx, v) in data.iter().enumerate() {
        let p = idx % (n * n);
        let iz = (idx / (n * n)) % nz;
        let c = idx / (n * n * nz);
        writeln!(w, "{c},{iz},{},{},{:e},{:e}", p / n, p % n, v.re, v.im)?;
    }
    Ok(())
}

fn read_bin(stem: &Path) -> Result<(SnapshotHeader, Vec<Complex64>)> {
    let b = fs::read(paths(stem).0)?;
    if b.len() < 44 || &b[..8] != MAGIC {
        return invalid("not a field snapshot");
    }
    let u = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
    let f = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
    let h = SnapshotHeader {
        comps: u(8),
        repr: if u(12) == 1 { Repr::Spectral } else { Repr::Physical },
        modes: u(16),
        vertical_nodes: u(20),
        scheme: if u(24) == 1 { VerticalScheme::FiniteDifference } else { VerticalScheme::Chebyshev },
        box_len: f(28),
        depth: f(36),
    };
    let body = &b[44..];
    let expect = h.comps as usize * (h.modes as usize).pow(2) * (h.vertical_nodes as usize).max(1);
    if body.len() != 16 * expect {
        return Err(Error::InvalidInput(format!(
            "snapshot body holds {} bytes, header implies {}",
            body.len(),
            16 * expect
        )));
    }
    let data = body
        .chunks_exact(16)
        .map(|c| Complex64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap())))
        .collect();
    Ok((h, data))
}

pub fn write_half_space(stem: &Path, f: &HalfSpaceField) -> Result<()> {
    let h = SnapshotHeader {
        comps: f.comps() as u32,
        repr: f.repr(),
        modes: f.hgrid().n() as u32,
        vertical_nodes: f.vgrid().len() as u32,
        scheme: f.vgrid().scheme(),
        box_len: f.hgrid().box_len(),
        depth: f.vgrid().depth(),
    };
    write_pair(stem, &h, f.data())
}

pub fn write_surface(stem: &Path, f: &SurfaceField) -> Result<()> {
    let h = SnapshotHeader {
        comps: 1,
        repr: f.repr(),
        modes: f.grid().n() as u32,
        vertical_nodes: 0,
        scheme: VerticalScheme::Chebyshev,
        box_len: f.grid().box_len(),
        depth: 0.0,
    };
    write_pair(stem, &h, f.data())
}

pub fn read_half_space(stem: &Path) -> Result<HalfSpaceField> {
    let (h, data) = read_bin(stem)?;
    if h.vertical_nodes == 0 {
        return invalid("snapshot holds a surface field");
    }
    let hg = HorizontalGrid::new(h.modes as usize, h.box_len)?;
    let vg = VerticalGrid::new(h.scheme, h.vertical_nodes as usize, h.depth)?;
    let mut f = HalfSpaceField::zeros(&hg, &vg, h.comps as usize, h.repr);
    f.data_mut().copy_from_slice(&data);
    Ok(f)
}

pub fn read_surface(stem: &Path, grid: Option<&Arc<HorizontalGrid>>) -> Result<SurfaceField> {
    let (h, data) = read_bin(stem)?;
    if h.vertical_nodes != 0 {
        return invalid("snapshot holds a half-space field");
    }
    let g = match grid {
        Some(g) if g.n() == h.modes as usize && g.box_len() == h.box_len => g.clone(),
        _ => HorizontalGrid::new(h.modes as usize, h.box_len)?,
    };
    let mut f = SurfaceField::zeros(&g, h.repr);
    f.data_mut().copy_from_slice(&data);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join(format!("fsio-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let hg = HorizontalGrid::new(8, 5.0).unwrap();
        let vg = VerticalGrid::new(VerticalScheme::FiniteDifference, 16, 2.0).unwrap();
        let f = HalfSpaceField::from_fn(&hg, &vg, 2, |c, x| c as f64 + x[0] * x[2]).spectral();
        write_half_space(&dir.join("u"), &f).unwrap();
        let g = read_half_space(&dir.join("u")).unwrap();
        assert_eq!(f.data(), g.data());
        assert_eq!(g.vgrid().scheme(), VerticalScheme::FiniteDifference);
        let csv = fs::read_to_string(dir.join("u.csv")).unwrap();
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + f.data().len());
        let s = SurfaceField::from_fn(&hg, |x| x[1]);
        write_surface(&dir.join("h"), &s).unwrap();
        assert_eq!(read_surface(&dir.join("h"), Some(&hg)).unwrap().data(), s.data());
        fs::remove_dir_all(dir).ok();
    }
}
