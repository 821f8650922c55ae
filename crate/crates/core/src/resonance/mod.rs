//! Momentum shells `S(k, n)` and resonant sets `R(k, n)` over the truncated
//! lattice: a meet-in-the-middle table builder, brute-force oracles, divisor
//! statistics and the on-disk table format.

mod io;
pub mod naive;
mod table;

use serde::{Deserialize, Serialize};

pub use io::{load_table, load_table_for, save_table, CacheOutcome, TableCache, TABLE_FORMAT_VERSION, TABLE_MAGIC};
pub use naive::{enumerate_r_naive, enumerate_s_naive};
pub use table::{
    build_resonance_table, build_resonance_table_with_budget, divisor_statistics, ResonanceTable,
    DEFAULT_TUPLE_BUDGET,
};

/// Mode indexes `(k_1, ..., k_{2n+1})`; position `j` carries sign `(-1)^{j-1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedTuple(pub Vec<u32>);

impl SignedTuple {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Extremes of `|-lambda_k + sum_j (-1)^{j-1} lambda_{k_j}|` over in-box shell tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorStats {
    /// Smallest nonzero divisor; `None` when every divisor vanishes.
    pub gap: Option<u64>,
    pub max_freq: u64,
}

impl DivisorStats {
    /// The gap with `+inf` standing in for "no nonzero divisor".
    pub fn gap_or_inf(&self) -> f64 {
        self.gap.map_or(f64::INFINITY, |g| g as f64)
    }
}
