use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::table::{build_resonance_table_with_budget, ResonanceTable};
use super::DivisorStats;
use crate::error::{Error, Result};
use crate::spectral::{Lattice, ORDERING_VERSION};

pub const TABLE_MAGIC: [u8; 8] = *b"CGLRESTB";
pub const TABLE_FORMAT_VERSION: u32 = 1;

// magic, version, ordering, d, K, n, count, sha256(body)
const HEADER_LEN: usize = 8 + 4 * 5 + 8 + 32;

fn table_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::TableFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn encode_body(table: &ResonanceTable) -> Vec<u8> {
    let words: usize = table.runs.iter().map(|r| r.len()).sum();
    let mut body = Vec::with_capacity(16 + 8 * table.runs.len() + 4 * words);
    body.extend_from_slice(&table.divisor.gap.unwrap_or(0).to_le_bytes());
    body.extend_from_slice(&table.divisor.max_freq.to_le_bytes());
    for run in &table.runs {
        body.extend_from_slice(&((run.len() / table.tuple_len()) as u64).to_le_bytes());
        for &idx in run {
            body.extend_from_slice(&idx.to_le_bytes());
        }
    }
    body
}

/// Writes the table as: fixed header (magic, format version, ordering
/// version, d, K, n, total tuple count, SHA-256 of the body), then a body
/// holding the divisor gap (0 for none) and max divisor, followed by one run
/// per target in lattice order: tuple count (u64) and `count * (2n+1)` mode
/// indexes (u32). All integers little-endian.
pub fn save_table(table: &ResonanceTable, path: &Path) -> Result<()> {
    let body = encode_body(table);
    let digest = Sha256::digest(&body);
    let mut out = Vec::with_capacity(HEADER_LEN + body.len());
    out.extend_from_slice(&TABLE_MAGIC);
    for v in [
        TABLE_FORMAT_VERSION,
        table.ordering,
        table.dim as u32,
        table.cutoff as u32,
        table.degree as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&table.total().to_le_bytes());
    out.extend_from_slice(&digest);
    out.extend_from_slice(&body);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    // write-then-rename so readers never observe a partial file
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&out)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Loads a table written by [`save_table`], verifying magic, versions and checksum.
pub fn load_table(path: &Path) -> Result<ResonanceTable> {
    let bytes = fs::read(path)?;
    let mut r = Reader { buf: &bytes, pos: 0 };
    let truncated = || table_error(path, "truncated header");
    if r.take(8).ok_or_else(truncated)? != TABLE_MAGIC {
        return Err(table_error(path, "bad magic"));
    }
    let version = r.u32().ok_or_else(truncated)?;
    if version != TABLE_FORMAT_VERSION {
        return Err(table_error(path, format!("unsupported format version {version}")));
    }
    let ordering = r.u32().ok_or_else(truncated)?;
    if ordering != ORDERING_VERSION {
        return Err(table_error(path, format!("unsupported ordering version {ordering}")));
    }
    let dim = r.u32().ok_or_else(truncated)? as usize;
    let cutoff = r.u32().ok_or_else(truncated)? as usize;
    let degree = r.u32().ok_or_else(truncated)? as usize;
    let count = r.u64().ok_or_else(truncated)?;
    let checksum = r.take(32).ok_or_else(truncated)?;
    let body = &bytes[r.pos..];
    if Sha256::digest(body).as_slice() != checksum {
        return Err(table_error(path, "checksum mismatch"));
    }

    let lattice = Lattice::new(dim, cutoff).map_err(|e| table_error(path, e.to_string()))?;
    let tuple_len = 2 * degree + 1;
    let mut b = Reader { buf: body, pos: 0 };
    let malformed = || table_error(path, "malformed body");
    let gap = b.u64().ok_or_else(malformed)?;
    let max_freq = b.u64().ok_or_else(malformed)?;
    let mut runs = Vec::with_capacity(lattice.len());
    let mut total = 0u64;
    for _ in 0..lattice.len() {
        let n = b.u64().ok_or_else(malformed)?;
        total += n;
        let words = (n as usize)
            .checked_mul(tuple_len)
            .ok_or_else(malformed)?;
        let raw = b.take(words * 4).ok_or_else(malformed)?;
        let run: Vec<u32> = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if run.iter().any(|&i| i as usize >= lattice.len()) {
            return Err(table_error(path, "mode index outside lattice"));
        }
        runs.push(run);
    }
    if b.pos != body.len() {
        return Err(malformed());
    }
    if total != count {
        return Err(table_error(path, "tuple count disagrees with header"));
    }
    Ok(ResonanceTable {
        dim,
        cutoff,
        degree,
        ordering,
        runs,
        divisor: DivisorStats {
            gap: (gap != 0).then_some(gap),
            max_freq,
        },
    })
}

/// Loads a table and checks it against the lattice and degree of a run.
pub fn load_table_for(path: &Path, lattice: &Lattice, n: usize) -> Result<ResonanceTable> {
    let table = load_table(path)?;
    table.ensure_matches(lattice)?;
    if table.degree != n {
        return Err(table_error(
            path,
            format!("table degree {} does not match requested {n}", table.degree),
        ));
    }
    Ok(table)
}

/// On-disk memo of tables keyed by `(d, K, n)`.
#[derive(Debug, Clone)]
pub struct TableCache {
    dir: PathBuf,
    budget: u64,
}

/// How a cached table was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Built,
    /// The cached file was unreadable and has been replaced.
    Rebuilt(String),
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            budget: super::DEFAULT_TUPLE_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, lattice: &Lattice, n: usize) -> PathBuf {
        self.dir.join(format!(
            "res_d{}_K{}_n{}_o{}.tbl",
            lattice.dim(),
            lattice.cutoff(),
            n,
            ORDERING_VERSION
        ))
    }

    pub fn get_or_build(&self, lattice: &Lattice, n: usize) -> Result<(ResonanceTable, CacheOutcome)> {
        let path = self.path_for(lattice, n);
        let mut outcome = CacheOutcome::Built;
        if path.exists() {
            match load_table_for(&path, lattice, n) {
                Ok(t) => return Ok((t, CacheOutcome::Hit)),
                Err(e) => outcome = CacheOutcome::Rebuilt(e.to_string()),
            }
        }
        let table = build_resonance_table_with_budget(lattice, n, self.budget)?;
        save_table(&table, &path)?;
        Ok((table, outcome))
    }
}
