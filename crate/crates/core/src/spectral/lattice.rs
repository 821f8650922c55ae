use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Version tag for the mode ordering; recorded in every serialized artifact.
pub const ORDERING_VERSION: u32 = 1;

/// A sup-norm box `max_i |k_i| <= K` of the integer lattice `Z^d`.
///
/// Modes are stored in lexicographic order over the coordinates, each
/// coordinate running over `-K..=K`, so mode indexes are stable across runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    cutoff: usize,
    modes: Vec<i32>,
    lambda: Vec<i64>,
}

impl Lattice {
    pub fn new(dim: usize, cutoff: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("lattice dimension must be at least 1"));
        }
        let side = 2 * cutoff + 1;
        let count = side
            .checked_pow(dim as u32)
            .filter(|&c| c <= u32::MAX as usize)
            .ok_or_else(|| invalid(format!("lattice (d={dim}, K={cutoff}) is too large")))?;
        let k = cutoff as i32;
        let mut modes = Vec::with_capacity(count * dim);
        let mut lambda = Vec::with_capacity(count);
        let mut coords = vec![-k; dim];
        for _ in 0..count {
            modes.extend_from_slice(&coords);
            lambda.push(coords.iter().map(|&c| (c as i64) * (c as i64)).sum());
            // odometer increment, last axis fastest
            for axis in (0..dim).rev() {
                if coords[axis] < k {
                    coords[axis] += 1;
                    break;
                }
                coords[axis] = -k;
            }
        }
        Ok(Self {
            dim,
            cutoff,
            modes,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Points per axis, `2K + 1`.
    pub fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Coordinates of mode `idx`.
    pub fn mode(&self, idx: usize) -> &[i32] {
        &self.modes[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn modes(&self) -> impl Iterator<Item = &[i32]> {
        self.modes.chunks_exact(self.dim)
    }

    /// Frequency vector, `lambda_k = |k|^2`.
    pub fn lambda(&self) -> &[i64] {
        &self.lambda
    }

    /// Index of the mode with the given coordinates, or `None` if outside the box.
    pub fn index_of(&self, coords: &[i32]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let k = self.cutoff as i32;
        let side = self.side();
        let mut idx = 0usize;
        for &c in coords {
            if c < -k || c > k {
                return None;
            }
            idx = idx * side + (c + k) as usize;
        }
        Some(idx)
    }

    /// Index of the zero mode.
    pub fn zero_index(&self) -> usize {
        self.len() / 2
    }

    /// Index of `-k` for the mode at `idx`. The box is symmetric, and the
    /// lexicographic ordering maps negation to index reversal.
    pub fn negate_index(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    /// `|k|^{2s} + 1`, the weight of the `h^s` norm. `|0|^{2s}` is taken as 0.
    pub fn weight(&self, idx: usize, s: f64) -> f64 {
        let l = self.lambda[idx];
        if l == 0 {
            1.0
        } else {
            (l as f64).powf(s) + 1.0
        }
    }

    pub fn max_lambda(&self) -> i64 {
        (self.dim * self.cutoff * self.cutoff) as i64
    }

    pub fn descriptor(&self) -> LatticeDescriptor {
        LatticeDescriptor {
            d: self.dim,
            cutoff: self.cutoff,
            ordering: ORDERING_VERSION,
        }
    }

    pub fn same_shape(&self, other: &Lattice) -> bool {
        self.dim == other.dim && self.cutoff == other.cutoff
    }

    pub(crate) fn ensure_same(&self, other: &Lattice) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch {
                expected_d: self.dim,
                expected_k: self.cutoff,
                found_d: other.dim,
                found_k: other.cutoff,
            })
        }
    }
}

/// Header identifying a lattice inside serialized records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDescriptor {
    pub d: usize,
    #[serde(rename = "K")]
    pub cutoff: usize,
    pub ordering: u32,
}
