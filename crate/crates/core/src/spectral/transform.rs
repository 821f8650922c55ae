use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::FourierField;
use super::lattice::Lattice;
use crate::error::{invalid, Error, Result};

/// An equispaced `M^d` collocation grid on the 2 pi-periodic torus with its
/// FFT plans. Buffers are row-major with the last axis fastest.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("size", &self.size)
            .finish()
    }
}

impl Grid {
    pub fn new(dim: usize, size: usize) -> Result<Self> {
        if dim == 0 || size == 0 {
            return Err(invalid("grid needs positive dimension and size"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            dim,
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.size;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        for axis in 0..self.dim {
            let inner = m.pow((self.dim - 1 - axis) as u32);
            if inner == 1 {
                fft.process_with_scratch(buf, &mut scratch);
                continue;
            }
            let block = inner * m;
            for chunk in buf.chunks_exact_mut(block) {
                for offset in 0..inner {
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = chunk[offset + j * inner];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, val) in line.iter().enumerate() {
                        chunk[offset + j * inner] = *val;
                    }
                }
            }
        }
    }

    /// Unnormalized `sum_j u_j e^{-2 pi i j.k / M}` along every axis.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        self.transform(buf, &self.forward);
    }

    /// Unnormalized `sum_k v_k e^{+2 pi i j.k / M}` along every axis.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        self.transform(buf, &self.inverse);
    }

    /// Position of each lattice mode in the grid spectrum (wavenumbers taken mod M).
    pub fn spectral_map(&self, lattice: &Lattice) -> Result<Vec<usize>> {
        if lattice.dim() != self.dim {
            return Err(invalid("grid and lattice dimensions differ"));
        }
        let required = lattice.side();
        if self.size < required {
            return Err(Error::GridTooSmall {
                grid: self.size,
                required,
            });
        }
        let m = self.size as i64;
        Ok(lattice
            .modes()
            .map(|coords| {
                coords
                    .iter()
                    .fold(0usize, |acc, &c| acc * self.size + (c as i64).rem_euclid(m) as usize)
            })
            .collect())
    }
}

/// Samples of `u(x)` on an equispaced `M^d` grid, `x_j = 2 pi j / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub dim: usize,
    pub grid: usize,
    pub values: Vec<Complex64>,
}

/// `u(x_j) = sum_k v_k e^{i k.x_j}` on an `M^d` grid. Requires `M >= 2K + 1`.
pub fn to_physical(v: &FourierField, grid: usize) -> Result<PhysicalField> {
    let lattice = v.lattice();
    let g = Grid::new(lattice.dim(), grid)?;
    let map = g.spectral_map(lattice)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); g.len()];
    for (&pos, &a) in map.iter().zip(v.amps()) {
        buf[pos] = a;
    }
    g.inverse_in_place(&mut buf);
    Ok(PhysicalField {
        dim: lattice.dim(),
        grid,
        values: buf,
    })
}

/// Discrete Fourier coefficients `v_k = M^{-d} sum_j u(x_j) e^{-i k.x_j}` restricted to the box.
pub fn to_fourier(u: &PhysicalField, lattice: Arc<Lattice>) -> Result<FourierField> {
    let g = Grid::new(u.dim, u.grid)?;
    if u.values.len() != g.len() {
        return Err(invalid("physical field sample count does not match its grid"));
    }
    let map = g.spectral_map(&lattice)?;
    let mut buf = u.values.clone();
    g.forward_in_place(&mut buf);
    let norm = 1.0 / g.len() as f64;
    let amps = map.iter().map(|&pos| buf[pos] * norm).collect();
    FourierField::from_amps(lattice, amps)
}

/// Smallest `n >= min` whose only prime factors are 2, 3 and 5.
pub fn smooth_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}
