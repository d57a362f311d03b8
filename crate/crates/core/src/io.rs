//! Serialization: 17-digit JSON, the profile file schema, the on-disk profile
//! cache and CSV rows.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Result, VortexError};
use crate::grid::RadialGrid;
use crate::profile::{bvp_residual, solve, Profile, Provenance, SolveOptions};

pub const PROFILE_SCHEMA: &str = "vortexlab-profile-v1";

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "VORTEXLAB_CACHE";
pub const DEFAULT_CACHE_DIR: &str = "vortexlab-cache";

/// Writes every float in scientific notation with 17 significant digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactFloats;

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// A float as it appears in CSV and JSON output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats);
    value
        .serialize(&mut ser)
        .map_err(|e| VortexError::Format(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| VortexError::Format(e.to_string()))
}

/// The file representation of a profile.
pub fn profile_to_value(profile: &Profile) -> Value {
    json!({
        "schema": PROFILE_SCHEMA,
        "p": profile.p,
        "omega": profile.omega,
        "m": profile.m,
        "grid": { "r_max": profile.grid.r_max, "n": profile.grid.n },
        "values": profile.values,
        "residual_norm": profile.residual_norm,
    })
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| VortexError::Format(format!("profile file lacks \"{key}\"")))
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    field(v, key)?
        .as_f64()
        .ok_or_else(|| VortexError::Format(format!("\"{key}\" is not a number")))
}

fn as_u64(v: &Value, key: &str) -> Result<u64> {
    field(v, key)?
        .as_u64()
        .ok_or_else(|| VortexError::Format(format!("\"{key}\" is not a non-negative integer")))
}

/// Reads a profile; `converged` is re-derived from the stored samples.
pub fn profile_from_value(v: &Value) -> Result<Profile> {
    match field(v, "schema")?.as_str() {
        Some(PROFILE_SCHEMA) => {}
        other => return Err(VortexError::Format(format!("unknown profile schema {other:?}"))),
    }
    let grid_v = field(v, "grid")?;
    let grid = RadialGrid::new(as_f64(grid_v, "r_max")?, as_u64(grid_v, "n")? as usize)?;
    let values = field(v, "values")?
        .as_array()
        .ok_or_else(|| VortexError::Format("\"values\" is not an array".into()))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| VortexError::Format("non-numeric sample".into())))
        .collect::<Result<Vec<f64>>>()?;
    let m = u32::try_from(as_u64(v, "m")?).map_err(|_| VortexError::Format("\"m\" out of range".into()))?;
    let mut prof = Profile {
        grid,
        values,
        p: as_f64(v, "p")?,
        omega: as_f64(v, "omega")?,
        m,
        converged: false,
        residual_norm: as_f64(v, "residual_norm")?,
        provenance: Provenance::Loaded,
    };
    let res = grid.norm_l2r(&bvp_residual(&prof)?);
    let (lo, hi) = prof
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    prof.converged = res <= SolveOptions::default().tol * prof.norm_l2r() && hi > 0.0 && lo >= -1e-8 * hi;
    Ok(prof)
}

pub fn read_profile(path: &Path) -> Result<Profile> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| VortexError::Format(e.to_string()))?;
    profile_from_value(&v)
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| VortexError::Io(e.error))?;
    Ok(())
}

pub fn write_profile(path: &Path, profile: &Profile) -> Result<()> {
    write_atomic(path, to_json_string(&profile_to_value(profile))?.as_bytes())
}

/// Converged profiles on disk, keyed by `(p, ω, m, n, r_max)`.
#[derive(Debug, Clone)]
pub struct ProfileCache {
    pub dir: PathBuf,
}

impl ProfileCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ProfileCache { dir: dir.into() }
    }

    /// `$VORTEXLAB_CACHE`, or `./vortexlab-cache`.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => ProfileCache::new(d),
            _ => ProfileCache::new(DEFAULT_CACHE_DIR),
        }
    }

    pub fn key(p: f64, omega: f64, m: u32, grid: &RadialGrid) -> String {
        let mut hasher = Sha256::new();
        hasher.update(p.to_bits().to_le_bytes());
        hasher.update(omega.to_bits().to_le_bytes());
        hasher.update(m.to_le_bytes());
        hasher.update((grid.n as u64).to_le_bytes());
        hasher.update(grid.r_max.to_bits().to_le_bytes());
        let digest = hasher.finalize();
        digest[..12].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn path(&self, p: f64, omega: f64, m: u32, grid: &RadialGrid) -> PathBuf {
        self.dir.join(format!("profile-{}.json", Self::key(p, omega, m, grid)))
    }

    /// A cached converged profile for exactly these parameters, if present.
    pub fn load(&self, p: f64, omega: f64, m: u32, grid: &RadialGrid) -> Result<Option<Profile>> {
        let path = self.path(p, omega, m, grid);
        if !path.exists() {
            return Ok(None);
        }
        let prof = read_profile(&path)?;
        let same = prof.p.to_bits() == p.to_bits()
            && prof.omega.to_bits() == omega.to_bits()
            && prof.m == m
            && prof.grid == *grid;
        Ok((same && prof.converged).then_some(prof))
    }

    pub fn store(&self, profile: &Profile) -> Result<PathBuf> {
        let path = self.path(profile.p, profile.omega, profile.m, &profile.grid);
        write_profile(&path, profile)?;
        Ok(path)
    }

    /// Loads from the cache or solves and stores. The flag reports a cache hit.
    pub fn get_or_solve(&self, p: f64, omega: f64, m: u32, grid: &RadialGrid) -> Result<(Profile, bool)> {
        if let Some(prof) = self.load(p, omega, m, grid)? {
            return Ok((prof, true));
        }
        let prof = solve(p, omega, m, grid, SolveOptions::default())?;
        self.store(&prof)?;
        Ok((prof, false))
    }
}

/// Comma-separated rows with a header, LF line endings.
pub fn write_csv<W: Write>(mut out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::balance_constants;

    fn small() -> Profile {
        let s = balance_constants(3.0, 1.0).unwrap();
        let g = RadialGrid::for_ring(&s, 8, Some(0.05), None).unwrap();
        solve(3.0, 1.0, 8, &g, SolveOptions::default()).unwrap()
    }

    #[test]
    fn floats_round_trip_bit_exactly() {
        let xs = [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, 5e-324, -2.5e17, 0.0];
        let text = to_json_string(&xs.to_vec()).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (a, b) in xs.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(text.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn profile_file_round_trip() {
        let prof = small();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        write_profile(&path, &prof).unwrap();
        let back = read_profile(&path).unwrap();
        assert_eq!(back.grid, prof.grid);
        assert!(back.values.iter().zip(&prof.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.residual_norm.to_bits(), prof.residual_norm.to_bits());
        assert_eq!(back.provenance, Provenance::Loaded);
        assert!(back.converged);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("{\"schema\":\"vortexlab-profile-v1\""));
        write_profile(&path, &back).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn rejects_foreign_schema() {
        let v = json!({"schema": "other"});
        assert!(matches!(profile_from_value(&v), Err(VortexError::Format(_))));
    }

    #[test]
    fn cache_hits_on_second_request() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ProfileCache::new(dir.path());
        let s = balance_constants(3.0, 1.0).unwrap();
        let g = RadialGrid::for_ring(&s, 8, Some(0.05), None).unwrap();
        let (a, hit_a) = cache.get_or_solve(3.0, 1.0, 8, &g).unwrap();
        let bytes = fs::read(cache.path(3.0, 1.0, 8, &g)).unwrap();
        let (b, hit_b) = cache.get_or_solve(3.0, 1.0, 8, &g).unwrap();
        assert!(!hit_a && hit_b);
        assert_eq!(a.values, b.values);
        assert_eq!(fs::read(cache.path(3.0, 1.0, 8, &g)).unwrap(), bytes);
        let other = RadialGrid::for_ring(&s, 8, Some(0.04), None).unwrap();
        assert_ne!(cache.path(3.0, 1.0, 8, &g), cache.path(3.0, 1.0, 8, &other));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["t", "norm"], &[vec!["0".into(), fmt_f64(1.0)]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,norm\n0,1.0000000000000000e0\n");
    }
}
