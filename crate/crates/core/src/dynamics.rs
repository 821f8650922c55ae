//! Vector fields of the rescaled equation: the full nonlinearity `P(v)`
//! (dealiased collocation, plus a convolution oracle), the resonant average
//! `R(v)` (table sum, plus the rotation-average quadrature), and the
//! dissipation operator with its semigroup.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::resonance::{divisor_statistics, naive::for_each_shell_tuple, ResonanceTable};
use crate::spectral::{smooth_size, FourierField, Grid, Lattice};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Default cost bound (monomial evaluations) for the convolution oracle.
pub const ORACLE_COST_BOUND: u64 = 200_000_000;

/// Scalar parameters of `u_t + i Lap u = eps [mu (-1)^{m-1} Lap^m u + b|u|^{2p}u + ic|u|^{2q}u]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationParams {
    pub epsilon: f64,
    pub mu: f64,
    pub b: f64,
    pub c: f64,
    pub m: u32,
    pub p: u32,
    pub q: u32,
}

impl EquationParams {
    pub fn new(epsilon: f64, mu: f64, b: f64, c: f64, m: u32, p: u32, q: u32) -> Result<Self> {
        let params = Self {
            epsilon,
            mu,
            b,
            c,
            m,
            p,
            q,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(invalid(format!("mu must be nonnegative, got {}", self.mu)));
        }
        if !self.b.is_finite() || !self.c.is_finite() {
            return Err(invalid("b and c must be finite"));
        }
        if self.m == 0 || self.p == 0 || self.q == 0 {
            return Err(invalid("m, p and q must be positive integers"));
        }
        Ok(())
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// `n = max(p, q)`, which fixes the nonlinearity degree `2n + 1`.
    pub fn max_degree(&self) -> usize {
        self.p.max(self.q) as usize
    }

    /// Degrees whose monomials actually enter the vector field.
    pub fn active_degrees(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if self.b != 0.0 {
            out.push(self.p as usize);
        }
        if self.c != 0.0 && !out.contains(&(self.q as usize)) {
            out.push(self.q as usize);
        }
        out
    }

    /// `mu lambda^m`, the damping rate of a mode.
    pub fn damping(&self, lambda: i64) -> f64 {
        if self.mu == 0.0 {
            0.0
        } else {
            self.mu * (lambda as f64).powi(self.m as i32)
        }
    }
}

/// Points per axis needed for alias-free collocation of a degree-`2n+1`
/// nonlinearity on a box of cutoff `K`: `(2n + 2) K + 1`.
pub fn dealiased_grid_size(cutoff: usize, n: usize) -> usize {
    (2 * n + 2) * cutoff + 1
}

/// Dealiased collocation evaluator for polynomial nonlinearities on a lattice.
#[derive(Debug, Clone)]
pub struct Collocation {
    lattice: Arc<Lattice>,
    grid: Grid,
    map: Vec<usize>,
    degree: usize,
}

impl Collocation {
    /// Picks the smallest 5-smooth grid satisfying the dealiasing rule for degree `n`.
    pub fn new(lattice: Arc<Lattice>, n: usize) -> Result<Self> {
        let size = smooth_size(dealiased_grid_size(lattice.cutoff(), n));
        Self::with_grid(lattice, n, size)
    }

    pub fn with_grid(lattice: Arc<Lattice>, n: usize, size: usize) -> Result<Self> {
        let required = dealiased_grid_size(lattice.cutoff(), n);
        if size < required {
            return Err(Error::GridTooSmall {
                grid: size,
                required,
            });
        }
        let grid = Grid::new(lattice.dim(), size)?;
        let map = grid.spectral_map(&lattice)?;
        Ok(Self {
            lattice,
            grid,
            map,
            degree: n,
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn grid_size(&self) -> usize {
        self.grid.size()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn samples(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![ZERO; self.grid.len()];
        for (&pos, &a) in self.map.iter().zip(amps) {
            buf[pos] = a;
        }
        self.grid.inverse_in_place(&mut buf);
        buf
    }

    fn coefficients(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        self.grid.forward_in_place(&mut buf);
        let norm = 1.0 / self.grid.len() as f64;
        self.map.iter().map(|&pos| buf[pos] * norm).collect()
    }

    fn check(&self, v: &FourierField, n: usize) -> Result<()> {
        self.lattice.ensure_same(v.lattice())?;
        if n > self.degree {
            return Err(Error::GridTooSmall {
                grid: self.grid.size(),
                required: dealiased_grid_size(self.lattice.cutoff(), n),
            });
        }
        Ok(())
    }

    /// Box-truncated Fourier coefficients of `b|u|^{2p}u + ic|u|^{2q}u`, `u = F^{-1} v`.
    pub fn nonlinearity(&self, v: &FourierField, params: &EquationParams) -> Result<FourierField> {
        self.check(v, params.max_degree())?;
        Ok(v.with_amps(self.nonlinearity_amps(v.amps(), params)))
    }

    pub(crate) fn nonlinearity_amps(&self, amps: &[Complex64], params: &EquationParams) -> Vec<Complex64> {
        let mut buf = self.samples(amps);
        let coef_c = Complex64::new(0.0, params.c);
        for u in buf.iter_mut() {
            let r = u.norm_sqr();
            let mut g = ZERO;
            if params.b != 0.0 {
                g += params.b * r.powi(params.p as i32);
            }
            if params.c != 0.0 {
                g += coef_c * r.powi(params.q as i32);
            }
            *u *= g;
        }
        self.coefficients(buf)
    }

    /// Box-truncated coefficients of `|u|^{2n} u` alone.
    pub fn power_term(&self, v: &FourierField, n: usize) -> Result<FourierField> {
        self.check(v, n)?;
        let mut buf = self.samples(v.amps());
        for u in buf.iter_mut() {
            *u *= u.norm_sqr().powi(n as i32);
        }
        Ok(v.with_amps(self.coefficients(buf)))
    }

    /// Exact spatial mean of `|u|^{2r}` for `r <= n + 1`.
    pub fn mean_abs_pow(&self, v: &FourierField, r: usize) -> Result<f64> {
        self.lattice.ensure_same(v.lattice())?;
        if r > self.degree + 1 {
            return Err(Error::GridTooSmall {
                grid: self.grid.size(),
                required: 2 * r * self.lattice.cutoff() + 1,
            });
        }
        let buf = self.samples(v.amps());
        let sum: f64 = buf.iter().map(|u| u.norm_sqr().powi(r as i32)).sum();
        Ok(sum / buf.len() as f64)
    }
}

/// `P(v)` via dealiased collocation on the smallest admissible grid.
pub fn nonlinearity_p(v: &FourierField, params: &EquationParams) -> Result<FourierField> {
    Collocation::new(Arc::clone(v.lattice()), params.max_degree())?.nonlinearity(v, params)
}

fn monomial(amps: &[Complex64], tuple: &[u32]) -> Complex64 {
    let mut acc = amps[tuple[0] as usize];
    for pair in tuple[1..].chunks_exact(2) {
        acc *= amps[pair[0] as usize].conj() * amps[pair[1] as usize];
    }
    acc
}

/// `P_k(v, n) = sum_{S(k,n)} v_{k1} conj(v_{k2}) ... v_{k_{2n+1}}` by direct
/// enumeration over in-box tuples.
pub fn nonlinearity_p_oracle(v: &FourierField, n: usize) -> Result<FourierField> {
    nonlinearity_p_oracle_bounded(v, n, ORACLE_COST_BOUND)
}

pub fn nonlinearity_p_oracle_bounded(v: &FourierField, n: usize, bound: u64) -> Result<FourierField> {
    if n == 0 {
        return Err(invalid("degree n must be at least 1"));
    }
    let lattice = v.lattice();
    let cost = (lattice.len() as u64).saturating_pow(2 * n as u32 + 1);
    if cost > bound {
        return Err(Error::Resource {
            estimated: cost,
            budget: bound,
        });
    }
    let amps = v.amps();
    let out = (0..lattice.len())
        .into_par_iter()
        .map(|k| {
            let mut acc = ZERO;
            for_each_shell_tuple(lattice, k, n, |t, _| acc += monomial(amps, t));
            acc
        })
        .collect();
    Ok(v.with_amps(out))
}

/// `R_k(v, n) = sum over R(k, n)` of the monomials, from a resonance table.
pub fn resonant_sum(v: &FourierField, table: &ResonanceTable) -> Result<FourierField> {
    table.ensure_matches(v.lattice())?;
    Ok(v.with_amps(resonant_sum_amps(v.amps(), table)))
}

fn resonant_sum_amps(amps: &[Complex64], table: &ResonanceTable) -> Vec<Complex64> {
    (0..table.targets())
        .into_par_iter()
        .map(|k| table.tuples(k).map(|t| monomial(amps, t)).sum())
        .collect()
}

/// The resonance tables for degrees `p` and `q` (possibly the same table).
#[derive(Debug, Clone)]
pub struct ResonantTables {
    pub p: Arc<ResonanceTable>,
    pub q: Arc<ResonanceTable>,
}

impl ResonantTables {
    pub fn new(p: Arc<ResonanceTable>, q: Arc<ResonanceTable>) -> Self {
        Self { p, q }
    }

    pub fn check(&self, lattice: &Lattice, params: &EquationParams) -> Result<()> {
        self.p.ensure_matches(lattice)?;
        self.q.ensure_matches(lattice)?;
        if self.p.degree() != params.p as usize || self.q.degree() != params.q as usize {
            return Err(invalid(format!(
                "tables have degrees ({}, {}) but params need (p={}, q={})",
                self.p.degree(),
                self.q.degree(),
                params.p,
                params.q
            )));
        }
        Ok(())
    }

    /// Largest `|divisor|` over both degrees.
    pub fn max_freq(&self) -> u64 {
        self.p.divisor().max_freq.max(self.q.divisor().max_freq)
    }
}

/// `R(v) = b R(v, p) + ic R(v, q)` from tables.
pub fn resonant_r_table(
    v: &FourierField,
    tables: &ResonantTables,
    params: &EquationParams,
) -> Result<FourierField> {
    tables.check(v.lattice(), params)?;
    Ok(v.with_amps(resonant_r_amps(v.amps(), tables, params)))
}

pub(crate) fn resonant_r_amps(
    amps: &[Complex64],
    tables: &ResonantTables,
    params: &EquationParams,
) -> Vec<Complex64> {
    let mut out = vec![ZERO; amps.len()];
    let c = Complex64::new(0.0, params.c);
    if params.b != 0.0 {
        for (o, r) in out.iter_mut().zip(resonant_sum_amps(amps, &tables.p)) {
            *o += params.b * r;
        }
    }
    if params.c != 0.0 {
        for (o, r) in out.iter_mut().zip(resonant_sum_amps(amps, &tables.q)) {
            *o += c * r;
        }
    }
    out
}

/// Result of the rotation-average quadrature.
#[derive(Debug, Clone)]
pub struct AveragedField {
    pub field: FourierField,
    pub nodes: usize,
    /// Whether `nodes >= 2 max_freq + 1`, which makes the trapezoid rule exact.
    pub exact: bool,
}

/// Default node count `2 (2n+2) d K^2 + 1`, an overestimate of `2 max_freq + 1`.
pub fn default_average_nodes(lattice: &Lattice, params: &EquationParams) -> usize {
    2 * ((2 * params.max_degree() + 2) * lattice.dim() * lattice.cutoff().pow(2)) + 1
}

/// `R(v) = (1/2pi) int_0^{2pi} Phi_{-t Lambda} P(Phi_{t Lambda} v) dt` by the
/// equispaced trapezoid rule with `nodes` points.
pub fn resonant_r_average(
    v: &FourierField,
    params: &EquationParams,
    nodes: usize,
) -> Result<AveragedField> {
    let colloc = Collocation::new(Arc::clone(v.lattice()), params.max_degree())?;
    let max_freq = params
        .active_degrees()
        .into_iter()
        .map(|n| divisor_statistics(v.lattice(), n).map(|s| s.max_freq))
        .try_fold(0u64, |acc, s| s.map(|s| acc.max(s)))?;
    resonant_r_average_with(&colloc, v, params, nodes, max_freq)
}

pub fn resonant_r_average_with(
    colloc: &Collocation,
    v: &FourierField,
    params: &EquationParams,
    nodes: usize,
    max_freq: u64,
) -> Result<AveragedField> {
    if nodes == 0 {
        return Err(invalid("quadrature needs at least one node"));
    }
    colloc.check(v, params.max_degree())?;
    let terms: Vec<Vec<Complex64>> = (0..nodes)
        .into_par_iter()
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
            let rotated = v.rotate_by_lambda(t);
            let p = colloc.nonlinearity_amps(rotated.amps(), params);
            p.iter()
                .zip(v.lattice().lambda())
                .map(|(a, &l)| a * Complex64::cis(-t * l as f64))
                .collect()
        })
        .collect();
    let mut sum = vec![ZERO; v.amps().len()];
    for term in &terms {
        for (s, t) in sum.iter_mut().zip(term) {
            *s += t;
        }
    }
    let scale = 1.0 / nodes as f64;
    sum.iter_mut().for_each(|s| *s *= scale);
    Ok(AveragedField {
        field: v.with_amps(sum),
        nodes,
        exact: nodes as u64 > 2 * max_freq,
    })
}

/// `F(v)_k = -mu lambda_k^m v_k`.
pub fn dissipation_f(v: &FourierField, params: &EquationParams) -> FourierField {
    v.with_amps(
        v.amps()
            .iter()
            .zip(v.lattice().lambda())
            .map(|(a, &l)| a * -params.damping(l))
            .collect(),
    )
}

/// `e^{F t} v`, multiplying each mode by `exp(-mu lambda_k^m t)`.
pub fn dissipation_semigroup(v: &FourierField, t: f64, params: &EquationParams) -> Result<FourierField> {
    if !(t >= 0.0) {
        return Err(invalid(format!("semigroup time must be nonnegative, got {t}")));
    }
    Ok(v.with_amps(
        v.amps()
            .iter()
            .zip(v.lattice().lambda())
            .map(|(a, &l)| a * (-params.damping(l) * t).exp())
            .collect(),
    ))
}

/// Lattice, parameters and evaluators for one equation; both vector fields
/// are evaluated from here.
#[derive(Debug, Clone)]
pub struct Model {
    lattice: Arc<Lattice>,
    params: EquationParams,
    colloc: Collocation,
    tables: Option<ResonantTables>,
}

impl Model {
    pub fn new(lattice: Arc<Lattice>, params: EquationParams) -> Result<Self> {
        params.validate()?;
        let colloc = Collocation::new(Arc::clone(&lattice), params.max_degree())?;
        Ok(Self {
            lattice,
            params,
            colloc,
            tables: None,
        })
    }

    pub fn with_tables(mut self, tables: ResonantTables) -> Result<Self> {
        tables.check(&self.lattice, &self.params)?;
        self.tables = Some(tables);
        Ok(self)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn params(&self) -> &EquationParams {
        &self.params
    }

    pub fn collocation(&self) -> &Collocation {
        &self.colloc
    }

    pub fn tables(&self) -> Option<&ResonantTables> {
        self.tables.as_ref()
    }

    /// Same lattice and evaluators with a different `epsilon`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let params = self.params.with_epsilon(epsilon);
        params.validate()?;
        Ok(Self {
            params,
            ..self.clone()
        })
    }

    pub(crate) fn require_tables(&self) -> Result<&ResonantTables> {
        self.tables
            .as_ref()
            .ok_or_else(|| invalid("resonance tables are required for the effective equation"))
    }

    pub fn nonlinearity(&self, v: &FourierField) -> Result<FourierField> {
        self.colloc.nonlinearity(v, &self.params)
    }

    pub fn resonant(&self, v: &FourierField) -> Result<FourierField> {
        resonant_r_table(v, self.require_tables()?, &self.params)
    }

    /// `i eps^{-1} lambda_k - mu lambda_k^m`, the full linear exponent of mode k.
    pub fn linear_rate(&self, lambda: i64) -> Complex64 {
        Complex64::new(-self.params.damping(lambda), lambda as f64 / self.params.epsilon)
    }

    /// `eps^{-1} i Lambda v + F(v) + P(v)`. The system is autonomous in `v`.
    pub fn full_rhs(&self, v: &FourierField) -> Result<FourierField> {
        let p = self.nonlinearity(v)?;
        Ok(v.with_amps(
            v.amps()
                .iter()
                .zip(self.lattice.lambda())
                .zip(p.amps())
                .map(|((a, &l), n)| self.linear_rate(l) * a + n)
                .collect(),
        ))
    }

    /// `F(v) + R(v)`.
    pub fn effective_rhs(&self, v: &FourierField) -> Result<FourierField> {
        let r = self.resonant(v)?;
        Ok(v.with_amps(
            v.amps()
                .iter()
                .zip(self.lattice.lambda())
                .zip(r.amps())
                .map(|((a, &l), n)| a * -self.params.damping(l) + n)
                .collect(),
        ))
    }

    /// `E_q = (1/2) sum lambda_k |v_k|^2 + eps c/(2q+2) mean |u|^{2q+2}`, the
    /// Hamiltonian of the full equation when `mu = b = 0`.
    pub fn energy(&self, v: &FourierField) -> Result<f64> {
        let q = self.params.q as usize;
        let potential = if self.params.c == 0.0 {
            0.0
        } else {
            self.colloc.mean_abs_pow(v, q + 1)?
        };
        Ok(0.5 * v.lambda_mass()
            + self.params.epsilon * self.params.c / (2 * q + 2) as f64 * potential)
    }

    /// `H_res` from the degree-`q` table (see [`hamiltonian_res`]).
    pub fn hamiltonian_res(&self, v: &FourierField) -> Result<Complex64> {
        hamiltonian_res(v, self.params.c, &self.require_tables()?.q)
    }
}

/// `H_res(v) = c/(2q+2) sum over RES` of `v_{k1} conj(v_{k2}) ... conj(v_{k_{2q+2}})`.
///
/// A `(2q+2)`-tuple with zero alternating momentum and frequency sums is
/// exactly a tuple of `R(k_{2q+2}, q)` with its target appended, so the sum
/// equals `c/(2q+2) sum_k conj(v_k) R_k(v, q)`. The imaginary part is returned
/// as a diagnostic; it vanishes up to rounding.
pub fn hamiltonian_res(v: &FourierField, c: f64, q_table: &ResonanceTable) -> Result<Complex64> {
    let r = resonant_sum(v, q_table)?;
    let pairing = v.inner(&r)?;
    Ok(pairing * (c / (2 * q_table.degree() + 2) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::build_resonance_table;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lat(d: usize, k: usize) -> Arc<Lattice> {
        Arc::new(Lattice::new(d, k).unwrap())
    }

    fn params(b: f64, cc: f64, p: u32, q: u32) -> EquationParams {
        EquationParams::new(0.1, 0.0, b, cc, 1, p, q).unwrap()
    }

    fn tables(l: &Lattice, pr: &EquationParams) -> ResonantTables {
        ResonantTables::new(
            Arc::new(build_resonance_table(l, pr.p as usize).unwrap()),
            Arc::new(build_resonance_table(l, pr.q as usize).unwrap()),
        )
    }

    #[test]
    fn params_validation() {
        assert!(EquationParams::new(0.0, 0.0, 1.0, 1.0, 1, 1, 1).is_err());
        assert!(EquationParams::new(0.1, -1.0, 1.0, 1.0, 1, 1, 1).is_err());
        assert!(EquationParams::new(0.1, 0.0, 1.0, 1.0, 0, 1, 1).is_err());
        assert!(EquationParams::new(0.1, 0.0, 1.0, 1.0, 1, 0, 1).is_err());
        assert!(EquationParams::new(0.1, 0.0, 1.0, 1.0, 1, 1, 0).is_err());
    }

    #[test]
    fn constant_field_nonlinearity() {
        let l = lat(1, 2);
        let v = FourierField::from_modes(l.clone(), [(&[0][..], c(1.0, 0.0))]).unwrap();
        let p = nonlinearity_p(&v, &params(1.0, 2.0, 1, 1)).unwrap();
        for (i, a) in p.amps().iter().enumerate() {
            let expected = if i == l.zero_index() { c(1.0, 2.0) } else { ZERO };
            assert!((a - expected).norm() < 1e-14);
        }
        let zero = nonlinearity_p(&FourierField::zeros(l), &params(1.0, 2.0, 1, 1)).unwrap();
        assert!(zero.amps().iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn undersized_grid_is_rejected() {
        let l = lat(1, 2);
        // cubic needs 4K+1 = 9
        assert!(matches!(
            Collocation::with_grid(l.clone(), 1, 8),
            Err(Error::GridTooSmall { grid: 8, required: 9 })
        ));
        let cubic = Collocation::with_grid(l.clone(), 1, 9).unwrap();
        let v = FourierField::zeros(l);
        assert!(cubic.nonlinearity(&v, &params(1.0, 0.0, 2, 1)).is_err());
    }

    #[test]
    fn oracle_single_mode() {
        let l = lat(1, 1);
        let a = c(0.6, -0.3);
        let v = FourierField::from_modes(l.clone(), [(&[0][..], a)]).unwrap();
        for n in 1..=2 {
            let p = nonlinearity_p_oracle(&v, n).unwrap();
            let expected = a * a.norm_sqr().powi(n as i32);
            assert!((p.amps()[l.zero_index()] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn oracle_hand_enumeration() {
        // v = (v_-1, v_0, v_1) = (0, 1, 1); the 7 tuples of S(0,1) are
        // (a, b, b - a) with b - a in the box. Only tuples over {0, 1}
        // survive: (0,0,0), (1,1,0), (0,1,1), giving P_0 = 3.
        let l = lat(1, 1);
        let v = FourierField::from_amps(l.clone(), vec![ZERO, c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let p = nonlinearity_p_oracle(&v, 1).unwrap();
        assert!((p.amps()[l.zero_index()] - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn oracle_refuses_large_lattices() {
        let v = FourierField::zeros(lat(2, 3));
        assert!(matches!(
            nonlinearity_p_oracle_bounded(&v, 2, 1000),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn resonant_single_mode() {
        let l = lat(1, 2);
        let a = c(0.7, 0.2);
        let v = FourierField::from_modes(l.clone(), [(&[0][..], a)]).unwrap();
        let pr = params(0.0, 1.0, 1, 1);
        let r = resonant_r_table(&v, &tables(&l, &pr), &pr).unwrap();
        assert!((r.amps()[l.zero_index()] - c(0.0, 1.0) * a * a.norm_sqr()).norm() < 1e-15);
        let pr2 = params(0.5, -1.5, 2, 1);
        let avg = resonant_r_average(&v, &pr2, 1).unwrap();
        let expected = c(0.0, -1.5) * a * a.norm_sqr() + 0.5 * a * a.norm_sqr().powi(2);
        assert!((avg.field.amps()[l.zero_index()] - expected).norm() < 1e-14);
    }

    #[test]
    fn zero_cutoff_average_is_exact_with_one_node() {
        let l = lat(2, 0);
        let v = FourierField::from_amps(l, vec![c(0.3, 0.4)]).unwrap();
        let avg = resonant_r_average(&v, &params(1.0, 1.0, 1, 1), 1).unwrap();
        assert!(avg.exact);
        let a = c(0.3, 0.4);
        assert!((avg.field.amps()[0] - c(1.0, 1.0) * a * a.norm_sqr()).norm() < 1e-15);
    }

    #[test]
    fn few_nodes_are_flagged() {
        let l = lat(1, 2);
        let v = FourierField::zeros(l);
        let avg = resonant_r_average(&v, &params(0.0, 1.0, 1, 1), 3).unwrap();
        assert!(!avg.exact);
    }

    #[test]
    fn dissipation_examples() {
        let l = lat(1, 1);
        let v = FourierField::from_amps(l.clone(), vec![c(1.0, 0.0); 3]).unwrap();
        let none = EquationParams::new(0.1, 0.0, 0.0, 0.0, 1, 1, 1).unwrap();
        assert!(dissipation_f(&v, &none).amps().iter().all(|a| a.norm() == 0.0));
        assert_eq!(dissipation_semigroup(&v, 3.0, &none).unwrap(), v);
        let damped = EquationParams::new(0.1, 1.0, 0.0, 0.0, 1, 1, 1).unwrap();
        let s = dissipation_semigroup(&v, 0.5, &damped).unwrap();
        assert!((s.amps()[2].re - 0.606530660).abs() < 1e-9);
        assert_eq!(s.amps()[l.zero_index()], c(1.0, 0.0));
        assert!(dissipation_semigroup(&v, -1.0, &damped).is_err());
    }

    #[test]
    fn rhs_decomposition() {
        let l = lat(1, 2);
        let amps: Vec<Complex64> = (0..5).map(|i| c(0.1 * i as f64, 0.05 - 0.02 * i as f64)).collect();
        let v = FourierField::from_amps(l.clone(), amps).unwrap();
        let pr = EquationParams::new(0.05, 0.3, -0.4, 1.2, 2, 1, 2).unwrap();
        let model = Model::new(l.clone(), pr).unwrap().with_tables(tables(&l, &pr)).unwrap();
        let full = model.full_rhs(&v).unwrap();
        let p = model.nonlinearity(&v).unwrap();
        for (i, ((f, n), a)) in full.amps().iter().zip(p.amps()).zip(v.amps()).enumerate() {
            let lin = model.linear_rate(l.lambda()[i]) * a;
            assert!((f - lin - n).norm() < 1e-14);
        }
        let linear = EquationParams { b: 0.0, c: 0.0, ..pr };
        let lm = Model::new(l.clone(), linear).unwrap().with_tables(tables(&l, &linear)).unwrap();
        let eff = lm.effective_rhs(&v).unwrap();
        let f = dissipation_f(&v, &linear);
        assert!(eff.sub(&f).unwrap().h_norm(0.0) < 1e-15);
    }

    #[test]
    fn effective_rhs_single_mode() {
        let l = lat(2, 1);
        let a = c(1.1, -0.4);
        let v = FourierField::from_modes(l.clone(), [(&[0, 0][..], a)]).unwrap();
        let pr = params(0.0, 1.0, 1, 1);
        let model = Model::new(l.clone(), pr).unwrap().with_tables(tables(&l, &pr)).unwrap();
        let e = model.effective_rhs(&v).unwrap();
        assert!((e.amps()[l.zero_index()] - c(0.0, 1.0) * a.norm_sqr() * a).norm() < 1e-14);
    }

    #[test]
    fn hamiltonian_single_mode() {
        let l = lat(1, 2);
        let a = c(0.8, 0.5);
        let v = FourierField::from_modes(l.clone(), [(&[0][..], a)]).unwrap();
        let t = build_resonance_table(&l, 1).unwrap();
        let h = hamiltonian_res(&v, 1.0, &t).unwrap();
        assert!((h.re - a.norm_sqr().powi(2) / 4.0).abs() < 1e-15);
        assert_eq!(h.im, 0.0);
        assert_eq!(hamiltonian_res(&FourierField::zeros(l), 1.0, &t).unwrap(), ZERO);
    }
}
