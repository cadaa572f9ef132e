//! On-disk cache of invariant bases.
//!
//! An entry is keyed by the SHA-256 of the canonical chain serialization,
//! the degree and the format version. The payload is a short header
//! followed by one canonically rendered basis row per line:
//!
//! ```text
//! commutant-basis 1
//! chain <hex hash>
//! degree 2
//! dimension 2
//! checksum <hex sha256 of the rows>
//! l0^2 + l1*lm1
//! q3*qm3 - 1/6*q2*qm2 + 5/3*q1*qm1 - 5/2*q0^2
//! ```
//!
//! Anything that fails to parse or check is treated as a miss: a warning is
//! logged and the basis is recomputed.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime};

use sha2::{Digest, Sha256};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::invariants::{invariant_space_with, BasisSource, DegreeBasis, DegreeDiagnostics, SolverConfig};
use crate::poly::Polynomial;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "commutant-basis";
const STALE_LOCK: Duration = Duration::from_secs(600);

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256_hex(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

/// Cache key for a chain and degree.
pub fn cache_key(chain: &ChainSpec, degree: u32) -> String {
    sha256_hex(&format!("{}\ndegree {degree}\nversion {FORMAT_VERSION}\n", chain.serialize()))
}

fn render_rows(chain: &ChainSpec, basis: &DegreeBasis) -> String {
    let mut body = String::new();
    for p in &basis.basis {
        body.push_str(&p.render(chain.generators()));
        body.push('\n');
    }
    body
}

/// The cache payload for a basis.
pub fn serialize_basis(chain: &ChainSpec, basis: &DegreeBasis) -> String {
    let body = render_rows(chain, basis);
    format!(
        "{MAGIC} {FORMAT_VERSION}\nchain {}\ndegree {}\ndimension {}\nchecksum {}\n{body}",
        chain.content_hash(),
        basis.degree,
        basis.dim(),
        sha256_hex(&body)
    )
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Internal(format!("cache payload rejected: {}", msg.into()))
}

/// Parses and checks a payload written by [`serialize_basis`].
pub fn deserialize_basis(chain: &ChainSpec, degree: u32, text: &str) -> Result<DegreeBasis> {
    let mut lines = text.split_inclusive('\n');
    let mut header = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| bad("truncated header"))?;
        let line = line.strip_suffix('\n').ok_or_else(|| bad("truncated header"))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(format!("expected `{key}`")))
    };
    if header(MAGIC)? != FORMAT_VERSION.to_string() {
        return Err(bad("format version mismatch"));
    }
    if header("chain")? != chain.content_hash() {
        return Err(bad("chain hash mismatch"));
    }
    if header("degree")? != degree.to_string() {
        return Err(bad("degree mismatch"));
    }
    let dim: usize = header("dimension")?.parse().map_err(|_| bad("bad dimension"))?;
    let checksum = header("checksum")?;
    let body: String = lines.collect();
    if sha256_hex(&body) != checksum {
        return Err(bad("checksum mismatch"));
    }
    if !body.is_empty() && !body.ends_with('\n') {
        return Err(bad("truncated body"));
    }
    let rows: Vec<Polynomial> =
        body.lines().map(|l| Polynomial::parse(l, chain.generators())).collect::<Result<_>>()?;
    if rows.len() != dim {
        return Err(bad("dimension mismatch"));
    }
    let basis = DegreeBasis::from_rows(chain, degree, rows)?;
    if !basis.is_reduced_echelon() || render_rows(chain, &basis) != body {
        return Err(bad("rows are not canonical"));
    }
    Ok(basis)
}

/// A cache directory with hit and miss counters.
#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Cache { dir, hits: AtomicU64::new(0), misses: AtomicU64::new(0) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::SeqCst)
    }

    pub fn entry_path(&self, chain: &ChainSpec, degree: u32) -> PathBuf {
        self.dir.join(format!("{}.basis", cache_key(chain, degree)))
    }

    /// The cached basis, or `None` (with a warning if an entry was present
    /// but unusable).
    pub fn load(&self, chain: &ChainSpec, degree: u32) -> Option<DegreeBasis> {
        let path = self.entry_path(chain, degree);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cannot read cache entry {}: {e}; recomputing", path.display());
                return None;
            }
        };
        match deserialize_basis(chain, degree, &text) {
            Ok(b) => Some(b),
            Err(e) => {
                log::warn!("{} ({}); recomputing", e, path.display());
                None
            }
        }
    }

    /// Writes an entry unless another writer holds its lock.
    pub fn store(&self, chain: &ChainSpec, basis: &DegreeBasis) -> Result<()> {
        let path = self.entry_path(chain, basis.degree);
        let lock = path.with_extension("lock");
        if let Ok(meta) = fs::metadata(&lock) {
            let age = meta.modified().ok().and_then(|m| SystemTime::now().duration_since(m).ok());
            if age.is_some_and(|a| a > STALE_LOCK) {
                log::warn!("removing stale cache lock {}", lock.display());
                let _ = fs::remove_file(&lock);
            }
        }
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                log::info!("cache entry {} is being written elsewhere; skipping", path.display());
                return Ok(());
            }
            Err(e) => return Err(io_err(&lock, e)),
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let result = (|| {
            let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
            f.write_all(serialize_basis(chain, basis).as_bytes()).map_err(|e| io_err(&tmp, e))?;
            f.sync_all().map_err(|e| io_err(&tmp, e))?;
            fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))
        })();
        let _ = fs::remove_file(&lock);
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result
    }
}

impl BasisSource for Cache {
    fn basis(&self, chain: &ChainSpec, k: u32, cfg: &SolverConfig) -> Result<(DegreeBasis, DegreeDiagnostics)> {
        if let Some(b) = self.load(chain, k) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            let diag = DegreeDiagnostics { dimension: b.dim(), cached: true, ..Default::default() };
            return Ok((b, diag));
        }
        self.misses.fetch_add(1, Ordering::SeqCst);
        let (b, diag) = invariant_space_with(chain, k, cfg)?;
        if let Err(e) = self.store(chain, &b) {
            log::warn!("could not write cache entry: {e}");
        }
        Ok((b, diag))
    }
}

/// Stores `entry` under `dir` and loads it back.
pub fn cache_roundtrip(chain: &ChainSpec, entry: &DegreeBasis, dir: &Path) -> Result<DegreeBasis> {
    let cache = Cache::open(dir)?;
    cache.store(chain, entry)?;
    let path = cache.entry_path(chain, entry.degree);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    deserialize_basis(chain, entry.degree, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::builtin_chain;
    use crate::invariants::invariant_space;

    #[test]
    fn payload_round_trip_and_rejections() {
        let c = builtin_chain("surfon").unwrap();
        let b = invariant_space(&c, 4).unwrap();
        let text = serialize_basis(&c, &b);
        assert_eq!(deserialize_basis(&c, 4, &text).unwrap(), b);
        assert!(deserialize_basis(&c, 2, &text).is_err());
        assert!(deserialize_basis(&c, 4, &text[..text.len() - 5]).is_err());
        assert!(deserialize_basis(&c, 4, &text.replacen("commutant-basis 1", "commutant-basis 0", 1)).is_err());
        let e = builtin_chain("elliott").unwrap();
        assert!(deserialize_basis(&e, 4, &text).is_err());
    }

    #[test]
    fn keys_differ_by_degree_and_chain() {
        let c = builtin_chain("surfon").unwrap();
        let e = builtin_chain("elliott").unwrap();
        assert_ne!(cache_key(&c, 2), cache_key(&c, 3));
        assert_ne!(cache_key(&c, 2), cache_key(&e, 2));
        assert_eq!(cache_key(&c, 2).len(), 64);
    }
}
