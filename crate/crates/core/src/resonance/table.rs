use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use super::{DivisorStats, SignedTuple};
use crate::error::{invalid, Error, Result};
use crate::spectral::{Lattice, ORDERING_VERSION};

/// Default cap on the number of stored tuples across all targets.
pub const DEFAULT_TUPLE_BUDGET: u64 = 50_000_000;

/// Resonant sets `R(k, n)` for every target mode of a lattice, stored as
/// runs of mode indexes (`2n + 1` per tuple) in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResonanceTable {
    pub(crate) dim: usize,
    pub(crate) cutoff: usize,
    pub(crate) degree: usize,
    pub(crate) ordering: u32,
    pub(crate) runs: Vec<Vec<u32>>,
    pub(crate) divisor: DivisorStats,
}

impl ResonanceTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// The degree parameter `n`; tuples have `2n + 1` entries.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tuple_len(&self) -> usize {
        2 * self.degree + 1
    }

    pub fn targets(&self) -> usize {
        self.runs.len()
    }

    /// Flat index run for one target.
    pub fn run(&self, target: usize) -> &[u32] {
        &self.runs[target]
    }

    pub fn tuples(&self, target: usize) -> impl Iterator<Item = &[u32]> {
        self.runs[target].chunks_exact(self.tuple_len())
    }

    pub fn signed_tuples(&self, target: usize) -> Vec<SignedTuple> {
        self.tuples(target).map(|t| SignedTuple(t.to_vec())).collect()
    }

    pub fn count(&self, target: usize) -> usize {
        self.runs[target].len() / self.tuple_len()
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..self.targets()).map(|t| self.count(t)).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts().iter().map(|&c| c as u64).sum()
    }

    pub fn divisor(&self) -> DivisorStats {
        self.divisor
    }

    pub fn matches(&self, lattice: &Lattice) -> bool {
        self.dim == lattice.dim() && self.cutoff == lattice.cutoff() && self.ordering == ORDERING_VERSION
    }

    pub fn ensure_matches(&self, lattice: &Lattice) -> Result<()> {
        if self.matches(lattice) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch {
                expected_d: lattice.dim(),
                expected_k: lattice.cutoff(),
                found_d: self.dim,
                found_k: self.cutoff,
            })
        }
    }
}

/// Partial sums over a run of consecutive tuple positions, in lexicographic order.
struct HalfTuples {
    /// packed partial momentum per half-tuple
    momentum: Vec<u64>,
    /// partial frequency per half-tuple
    freq: Vec<i64>,
}

/// Packs momentum vectors whose coordinates lie in `[-bound, bound]`.
#[derive(Clone, Copy)]
struct Packer {
    bound: i64,
    base: u64,
}

impl Packer {
    fn pack(&self, coords: impl Iterator<Item = i64>) -> Option<u64> {
        let mut key = 0u64;
        for c in coords {
            if c < -self.bound || c > self.bound {
                return None;
            }
            key = key * self.base + (c + self.bound) as u64;
        }
        Some(key)
    }
}

/// Enumerates all tuples on `len` consecutive positions starting at position
/// `first` (0-based; even positions carry `+`, odd carry `-`).
fn half_tuples(lattice: &Lattice, first: usize, len: usize, packer: Packer) -> HalfTuples {
    let modes = lattice.len();
    let dim = lattice.dim();
    let count = modes.pow(len as u32);
    let mut momentum = Vec::with_capacity(count);
    let mut freq = Vec::with_capacity(count);
    let mut idx = vec![0usize; len];
    let mut acc = vec![0i64; dim];
    for _ in 0..count {
        acc.iter_mut().for_each(|a| *a = 0);
        let mut f = 0i64;
        for (j, &m) in idx.iter().enumerate() {
            let sign = if (first + j).is_multiple_of(2) { 1 } else { -1 };
            for (a, &c) in acc.iter_mut().zip(lattice.mode(m)) {
                *a += sign * c as i64;
            }
            f += sign * lattice.lambda()[m];
        }
        momentum.push(packer.pack(acc.iter().copied()).expect("partial momentum within bound"));
        freq.push(f);
        for pos in (0..len).rev() {
            idx[pos] += 1;
            if idx[pos] < modes {
                break;
            }
            idx[pos] = 0;
        }
    }
    HalfTuples { momentum, freq }
}

fn decode(mut id: u64, modes: u64, len: usize, out: &mut [u32]) {
    for slot in out[..len].iter_mut().rev() {
        *slot = (id % modes) as u32;
        id /= modes;
    }
}

struct Split {
    left_len: usize,
    right_len: usize,
    packer: Packer,
    left: HalfTuples,
    right: HalfTuples,
}

impl Split {
    fn new(lattice: &Lattice, n: usize) -> Self {
        let len = 2 * n + 1;
        let left_len = len.div_ceil(2);
        let right_len = len - left_len;
        let k = lattice.cutoff() as i64;
        // right-side lookups subtract from a target in the box, so allow one extra K
        let bound = (left_len.max(right_len + 1) as i64) * k;
        let packer = Packer {
            bound,
            base: (2 * bound + 1) as u64,
        };
        let left = half_tuples(lattice, 0, left_len, packer);
        let right = half_tuples(lattice, left_len, right_len, packer);
        Self {
            left_len,
            right_len,
            packer,
            left,
            right,
        }
    }

    fn unpack(&self, key: u64, dim: usize) -> Vec<i64> {
        let mut out = vec![0i64; dim];
        let mut key = key;
        for slot in out.iter_mut().rev() {
            *slot = (key % self.packer.base) as i64 - self.packer.bound;
            key /= self.packer.base;
        }
        out
    }

    /// Key the right half must complement, for target `k`.
    fn needed(&self, lattice: &Lattice, target: usize, right_id: usize) -> Option<(u64, i64)> {
        let dim = lattice.dim();
        let r = self.unpack(self.right.momentum[right_id], dim);
        let k = lattice.mode(target);
        let mom = self
            .packer
            .pack((0..dim).map(|a| k[a] as i64 - r[a]))?;
        Some((mom, lattice.lambda()[target] - self.right.freq[right_id]))
    }
}

/// Builds `R(k, n)` for every target by meet-in-the-middle: the first
/// `ceil((2n+1)/2)` positions are indexed by exact integer key
/// `(partial momentum, partial frequency)`; the remaining positions are
/// scanned per target for exact complements.
pub fn build_resonance_table(lattice: &Lattice, n: usize) -> Result<ResonanceTable> {
    build_resonance_table_with_budget(lattice, n, DEFAULT_TUPLE_BUDGET)
}

pub fn build_resonance_table_with_budget(
    lattice: &Lattice,
    n: usize,
    budget: u64,
) -> Result<ResonanceTable> {
    if n == 0 {
        return Err(invalid("resonance degree n must be at least 1"));
    }
    let modes = lattice.len() as u64;
    let len = 2 * n + 1;
    // both halves are materialized; their size is the first resource bound
    let half = modes.saturating_pow(len.div_ceil(2) as u32);
    if half > budget.min(u32::MAX as u64) {
        return Err(Error::Resource {
            estimated: half,
            budget,
        });
    }

    let split = Split::new(lattice, n);
    let mut index: HashMap<(u64, i64), Vec<u32>> = HashMap::new();
    for (id, (&m, &f)) in split.left.momentum.iter().zip(&split.left.freq).enumerate() {
        index.entry((m, f)).or_default().push(id as u32);
    }

    let right_count = split.right.freq.len();
    let estimated: u64 = (0..lattice.len())
        .into_par_iter()
        .map(|target| {
            (0..right_count)
                .filter_map(|r| split.needed(lattice, target, r))
                .map(|key| index.get(&key).map_or(0, |v| v.len() as u64))
                .sum::<u64>()
        })
        .sum();
    if estimated > budget {
        return Err(Error::Resource { estimated, budget });
    }

    let runs: Vec<Vec<u32>> = (0..lattice.len())
        .into_par_iter()
        .map(|target| {
            let mut pairs: Vec<(u32, u32)> = Vec::new();
            for r in 0..right_count {
                if let Some(key) = split.needed(lattice, target, r) {
                    if let Some(lefts) = index.get(&key) {
                        pairs.extend(lefts.iter().map(|&l| (l, r as u32)));
                    }
                }
            }
            pairs.sort_unstable();
            let mut run = vec![0u32; pairs.len() * len];
            for (chunk, &(l, r)) in run.chunks_exact_mut(len).zip(&pairs) {
                decode(l as u64, modes, split.left_len, &mut chunk[..split.left_len]);
                decode(r as u64, modes, split.right_len, &mut chunk[split.left_len..]);
            }
            run
        })
        .collect();

    Ok(ResonanceTable {
        dim: lattice.dim(),
        cutoff: lattice.cutoff(),
        degree: n,
        ordering: ORDERING_VERSION,
        runs,
        divisor: divisor_statistics(lattice, n)?,
    })
}

/// Smallest nonzero and largest `|divisor|` over all in-box tuples of
/// `S(k, n)`, for every target. Uses the same split as the table builder but
/// joins sets of distinct partial frequencies instead of tuples.
pub fn divisor_statistics(lattice: &Lattice, n: usize) -> Result<DivisorStats> {
    if n == 0 {
        return Err(invalid("resonance degree n must be at least 1"));
    }
    let split = Split::new(lattice, n);
    let mut left: HashMap<u64, BTreeSet<i64>> = HashMap::new();
    for (&m, &f) in split.left.momentum.iter().zip(&split.left.freq) {
        left.entry(m).or_default().insert(f);
    }
    let left: HashMap<u64, Vec<i64>> = left
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().collect()))
        .collect();
    // right halves together with the target: (needed left momentum) -> offsets
    let mut right: HashMap<u64, BTreeSet<i64>> = HashMap::new();
    for target in 0..lattice.len() {
        for r in 0..split.right.freq.len() {
            if let Some((mom, need)) = split.needed(lattice, target, r) {
                // divisor = left_freq - need
                right.entry(mom).or_default().insert(need);
            }
        }
    }
    let mut gap: Option<u64> = None;
    let mut max_freq = 0u64;
    for (mom, needs) in &right {
        let Some(lefts) = left.get(mom) else { continue };
        let (lo, hi) = (lefts[0], lefts[lefts.len() - 1]);
        for &need in needs {
            max_freq = max_freq
                .max((lo - need).unsigned_abs())
                .max((hi - need).unsigned_abs());
            let pos = lefts.partition_point(|&f| f < need);
            let mut consider = |f: i64| {
                let a = (f - need).unsigned_abs();
                if a != 0 {
                    gap = Some(gap.map_or(a, |g| g.min(a)));
                }
            };
            if pos > 0 {
                consider(lefts[pos - 1]);
            }
            if pos < lefts.len() {
                consider(lefts[pos]);
                if lefts[pos] == need && pos + 1 < lefts.len() {
                    consider(lefts[pos + 1]);
                }
            }
        }
    }
    Ok(DivisorStats { gap, max_freq })
}
