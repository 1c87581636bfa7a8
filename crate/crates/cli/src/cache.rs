//! On-disk dispersion tables, keyed by the config hash.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use nanorbit_core::dispersion::{DispersionEntry, DispersionTable};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

/// Bumped whenever the layout or the solver output changes.
pub const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    hash: String,
    requested: (i64, i64),
    entries: Vec<DispersionEntry>,
}

pub fn cache_path(out_dir: &Path, hash: &str) -> PathBuf {
    out_dir.join("cache").join(format!("dispersion-{hash}.bin"))
}

/// Stores `table` unless it has solver failures.
pub fn store(out_dir: &Path, hash: &str, table: &DispersionTable) -> Result<Option<PathBuf>, PipelineError> {
    if !table.failures.is_empty() {
        return Ok(None);
    }
    let path = cache_path(out_dir, hash);
    let dir = path.parent().expect("cache path has a parent");
    std::fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
    let tmp = path.with_extension("bin.tmp");
    let file = File::create(&tmp).map_err(PipelineError::io(&tmp))?;
    let doc = CacheFile {
        version: CACHE_VERSION,
        hash: hash.to_string(),
        requested: table.requested,
        entries: table.entries.values().cloned().collect(),
    };
    bincode::serialize_into(BufWriter::new(file), &doc).map_err(|e| PipelineError::format(&tmp)(e.to_string()))?;
    std::fs::rename(&tmp, &path).map_err(PipelineError::io(&path))?;
    Ok(Some(path))
}

/// Loads the cached table for `hash`; `Ok(None)` when absent or written by
/// another cache version.
pub fn load(out_dir: &Path, hash: &str) -> Result<Option<DispersionTable>, PipelineError> {
    let path = cache_path(out_dir, hash);
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(PipelineError::Io { path, source: e }),
    };
    let doc: CacheFile = match bincode::deserialize_from(BufReader::new(file)) {
        Ok(doc) => doc,
        Err(_) => return Ok(None),
    };
    if doc.version != CACHE_VERSION || doc.hash != hash {
        return Ok(None);
    }
    let (m_min, m_max) = doc.requested;
    let table = DispersionTable::assemble(m_min, m_max, doc.entries.into_iter().map(|e| (e.m, Ok(Some(e)))))
        .map_err(|e| PipelineError::format(&path)(e.to_string()))?;
    Ok(Some(table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nanorbit_core::dispersion::{TrapParams, TrapSetup};
    use nanorbit_core::materials::{default_cesium, FiberSpec};

    fn small_table() -> DispersionTable {
        let setup = TrapSetup::new(TrapParams {
            fiber: FiberSpec::vacuum_clad(200e-9).unwrap(),
            atom: default_cesium(),
            trap_wavelength: 1064e-9,
            trap_power: 20e-3,
            r_span: 2e-6,
            grid_points: 2000,
        })
        .unwrap();
        nanorbit_core::dispersion::sweep(&setup, 466, 470).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let table = small_table();
        assert!(load(dir.path(), "abc").unwrap().is_none());
        store(dir.path(), "abc", &table).unwrap().unwrap();
        assert_eq!(load(dir.path(), "abc").unwrap().unwrap(), table);
        assert!(load(dir.path(), "other").unwrap().is_none());
    }

    #[test]
    fn stale_or_corrupt_files_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = cache_path(dir.path(), "abc");
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, b"not a cache").unwrap();
        assert!(load(dir.path(), "abc").unwrap().is_none());
    }

    #[test]
    fn tables_with_failures_are_not_stored() {
        let dir = tempfile::tempdir().unwrap();
        let mut table = small_table();
        table.failures.insert(467, nanorbit_core::Error::ConvergenceFailure("test"));
        assert!(store(dir.path(), "abc", &table).unwrap().is_none());
        assert!(!cache_path(dir.path(), "abc").exists());
    }
}
