//! Snapshot files, CSV tables and atomic writes.
//!
//! # Snapshot format
//!
//! Little-endian throughout.
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 8            | magic `ZSIMSNAP`                          |
//! | 4 (u32)      | format version, currently 1               |
//! | 4 (u32)      | `n1` (longitudes)                         |
//! | 4 (u32)      | `n2` (colatitudes)                        |
//! | 4 (u32)      | length `L` of the profile string          |
//! | L            | profile string, UTF-8 (`sphere`, `bump:0.1`, ...) |
//! | 8 (f64)      | time stamp                                |
//! | 8·n1         | longitude nodes                           |
//! | 8·n2         | colatitude nodes                          |
//! | 8·n1·n2 × 3  | `u¹`, `u²`, `h`, each indexed `i1·n2 + i2`|

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, State, VectorField};
use crate::geometry::SurfaceProfile;
use crate::grid::Grid;

const MAGIC: &[u8; 8] = b"ZSIMSNAP";
const VERSION: u32 = 1;

/// Writes `bytes` to a temporary sibling of `path`, syncs it and renames it
/// into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Format(format!("no file name in {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Hex SHA-256 prefix (16 characters) of `text`.
pub fn hash_hex(text: &str) -> String {
    let d = Sha256::digest(text.as_bytes());
    hex::encode(&d[..8])
}

pub fn encode_snapshot(s: &State, t: f64) -> Vec<u8> {
    let g = s.grid();
    let profile = g.profile.spec();
    let mut b = Vec::with_capacity(40 + profile.len() + 8 * (g.n1 + g.n2 + 3 * g.len()));
    b.extend_from_slice(MAGIC);
    for v in [VERSION, g.n1 as u32, g.n2 as u32, profile.len() as u32] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b.extend_from_slice(profile.as_bytes());
    let mut put = |xs: &[f64]| xs.iter().for_each(|x| b.extend_from_slice(&x.to_le_bytes()));
    put(&[t]);
    put(&g.lon);
    put(&g.colat);
    put(&s.u.c1);
    put(&s.u.c2);
    put(&s.h.values);
    b
}

struct Reader<'a> {
    b: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.b.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.at)))?;
        let out = &self.b[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * n)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

/// Decodes a snapshot, rebuilding its grid unless `grid` is given (then the
/// node arrays must match it).
pub fn decode_snapshot(bytes: &[u8], grid: Option<&Arc<Grid>>) -> Result<(State, f64)> {
    let mut r = Reader { b: bytes, at: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n1 = r.u32()? as usize;
    let n2 = r.u32()? as usize;
    let len = r.u32()? as usize;
    let profile = std::str::from_utf8(r.take(len)?).map_err(|e| Error::Format(e.to_string()))?.to_owned();
    let t = r.f64s(1)?[0];
    let lon = r.f64s(n1)?;
    let colat = r.f64s(n2)?;
    let grid = match grid {
        Some(g) => g.clone(),
        None => Grid::new(SurfaceProfile::parse(&profile)?, n1, n2)?,
    };
    let same = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-14);
    if grid.profile.spec() != profile || grid.n1 != n1 || grid.n2 != n2 || !same(&lon, &grid.lon) || !same(&colat, &grid.colat) {
        return Err(Error::GridMismatch);
    }
    let n = n1 * n2;
    let c1 = r.f64s(n)?;
    let c2 = r.f64s(n)?;
    let h = r.f64s(n)?;
    if r.at != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    let u = VectorField::from_components(
        ScalarField { grid: grid.clone(), values: c1 },
        ScalarField { grid: grid.clone(), values: c2 },
    );
    Ok((State { u, h: ScalarField { grid, values: h } }, t))
}

pub fn write_snapshot(path: &Path, s: &State, t: f64) -> Result<()> {
    atomic_write(path, &encode_snapshot(s, t))
}

pub fn read_snapshot(path: &Path, grid: Option<&Arc<Grid>>) -> Result<(State, f64)> {
    decode_snapshot(&fs::read(path)?, grid)
}

/// CSV table whose first two lines are `#` comments carrying the table
/// name, config hash and column units.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub config_hash: String,
    /// `(column, unit)`
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &str, config_hash: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.into(),
            config_hash: config_hash.into(),
            columns: columns.iter().map(|(c, u)| (c.to_string(), u.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {} config_hash={}\n", self.name, self.config_hash);
        let units: Vec<String> = self.columns.iter().map(|(c, u)| format!("{c}[{u}]")).collect();
        out.push_str(&format!("# units: {}\n", units.join(" ")));
        let head: Vec<&str> = self.columns.iter().map(|(c, _)| c.as_str()).collect();
        out.push_str(&head.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.render().as_bytes())
    }
}

/// Fixed-width scientific format used in every table.
pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn snapshot_round_trip() {
        let g = Grid::new(SurfaceProfile::bump(0.1), 12, 8).unwrap();
        let s = random::state(&g, 4, 1.0, 3, 1.0);
        let bytes = encode_snapshot(&s, 0.25);
        let (back, t) = decode_snapshot(&bytes, None).unwrap();
        assert_eq!(t, 0.25);
        assert_eq!(back.u.c1, s.u.c1);
        assert_eq!(back.h.values, s.h.values);
        let (_, _) = decode_snapshot(&bytes, Some(&g)).unwrap();
        let other = Grid::sphere(12, 8).unwrap();
        assert!(matches!(decode_snapshot(&bytes, Some(&other)), Err(Error::GridMismatch)));
        assert!(matches!(decode_snapshot(&bytes[..bytes.len() - 3], None), Err(Error::Format(_))));
        assert!(matches!(decode_snapshot(b"nonsense", None), Err(Error::Format(_))));
    }

    #[test]
    fn profile_specs_rebuild_profiles() {
        for p in [SurfaceProfile::sphere(), SurfaceProfile::bump(0.2), SurfaceProfile::polynomial(vec![1.0, 0.0, 0.1])] {
            let q = SurfaceProfile::parse(&p.spec()).unwrap();
            for x in [0.1, 1.0, 2.5] {
                assert_eq!(p.r(x), q.r(x));
            }
        }
    }

    #[test]
    fn atomic_csv_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("t.csv");
        let mut t = CsvTable::new("demo", &hash_hex("a = 1"), &[("t", "time"), ("x", "1")]);
        t.push(vec![num(0.0), num(1.5)]);
        t.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# demo config_hash="));
        assert!(text.contains("t,x\n0.000000000000e0,1.500000000000e0\n"));
        let leftovers = fs::read_dir(path.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
        assert_eq!(hash_hex("a = 1").len(), 16);
    }
}
