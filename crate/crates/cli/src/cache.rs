//! On-disk cache of stage artifacts keyed by config hash and stage name.
//!
//! Each entry is a text file in the operator or vector format with a
//! `.sha256` sidecar holding the hex digest of its bytes. A per-key
//! `<hash>.lock` file, created exclusively, guards concurrent runs. Entries
//! whose checksum does not match are rebuilt with a warning.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use qedlab_core::io::{read_operator, read_vector, write_operator, write_vector};
use qedlab_core::scalar::Cx;
use qedlab_core::sparse::SparseOperator;

use crate::config::hex;

pub const CACHE_ENV: &str = "QEDLAB_CACHE_DIR";

/// How long to wait for another run's lock before treating it as stale.
const LOCK_WAIT: Duration = Duration::from_secs(120);

#[derive(Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
    key: String,
    /// (stage, event) in access order.
    pub events: Vec<(String, String)>,
    pub warnings: Vec<String>,
    lock: Option<PathBuf>,
}

impl Cache {
    pub fn disabled(key: &str) -> Self {
        Cache { dir: None, key: key.to_string(), events: Vec::new(), warnings: Vec::new(), lock: None }
    }

    /// Opens (creating) `dir` and takes the lock for `key`.
    pub fn open(dir: &Path, key: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        let mut c = Cache { dir: Some(dir.to_path_buf()), key: key.to_string(), events: Vec::new(), warnings: Vec::new(), lock: None };
        c.acquire()?;
        Ok(c)
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    fn acquire(&mut self) -> std::io::Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(format!("{}.lock", self.key));
        let start = Instant::now();
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => {
                    self.lock = Some(path);
                    return Ok(());
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    if start.elapsed() > LOCK_WAIT {
                        self.warnings.push(format!("removing stale cache lock {}", path.display()));
                        let _ = fs::remove_file(&path);
                        continue;
                    }
                    std::thread::sleep(Duration::from_millis(50));
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn entry(&self, stage: &str, ext: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}-{stage}.{ext}", self.key)))
    }

    fn lookup<V>(&mut self, stage: &str, ext: &str, decode: impl FnOnce(&str) -> Option<V>) -> Option<V> {
        let Some(path) = self.entry(stage, ext) else {
            self.events.push((stage.to_string(), "disabled".into()));
            return None;
        };
        let sum_path = checksum_path(&path);
        let (Ok(bytes), Ok(sum)) = (fs::read(&path), fs::read_to_string(&sum_path)) else {
            self.events.push((stage.to_string(), "miss".into()));
            return None;
        };
        if hex(&Sha256::digest(&bytes)) != sum.trim() {
            self.warnings.push(format!("cache entry {} failed its checksum; rebuilding", path.display()));
            self.events.push((stage.to_string(), "rebuilt (checksum mismatch)".into()));
            return None;
        }
        match std::str::from_utf8(&bytes).ok().and_then(decode) {
            Some(v) => {
                self.events.push((stage.to_string(), "hit".into()));
                Some(v)
            }
            None => {
                self.warnings.push(format!("cache entry {} is unreadable; rebuilding", path.display()));
                self.events.push((stage.to_string(), "rebuilt (unreadable)".into()));
                None
            }
        }
    }

    fn store(&mut self, stage: &str, ext: &str, text: &str) {
        let Some(path) = self.entry(stage, ext) else { return };
        let tmp = path.with_extension(format!("{ext}.tmp"));
        let write = || -> std::io::Result<()> {
            fs::write(&tmp, text)?;
            fs::rename(&tmp, &path)?;
            fs::write(checksum_path(&path), hex(&Sha256::digest(text.as_bytes())) + "\n")
        };
        if let Err(e) = write() {
            self.warnings.push(format!("could not store cache entry {}: {e}", path.display()));
        }
    }

    pub fn get_operator(&mut self, stage: &str) -> Option<SparseOperator<f64>> {
        self.lookup(stage, "op", |t| read_operator(t).ok())
    }

    pub fn put_operator(&mut self, stage: &str, op: &SparseOperator<f64>) {
        if self.enabled() {
            if let Ok(text) = write_operator(op) {
                self.store(stage, "op", &text);
            }
        }
    }

    pub fn get_vector(&mut self, stage: &str) -> Option<Vec<Cx<f64>>> {
        self.lookup(stage, "vec", |t| read_vector(t).ok())
    }

    pub fn put_vector(&mut self, stage: &str, v: &[Cx<f64>]) {
        if self.enabled() {
            self.store(stage, "vec", &write_vector(v));
        }
    }

    /// Path of a stored entry, for diagnostics and tests.
    pub fn entry_path(&self, stage: &str, ext: &str) -> Option<PathBuf> {
        self.entry(stage, ext)
    }
}

impl Drop for Cache {
    fn drop(&mut self) {
        if let Some(p) = self.lock.take() {
            let _ = fs::remove_file(p);
        }
    }
}

fn checksum_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".sha256");
    PathBuf::from(s)
}
