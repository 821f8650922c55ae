use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lattice::{Lattice, LatticeDescriptor, ORDERING_VERSION};
use crate::error::{invalid, Error, Result};

/// Fourier amplitudes `v_k` of a field on the truncated lattice.
#[derive(Debug, Clone)]
pub struct FourierField {
    lattice: Arc<Lattice>,
    amps: Vec<Complex64>,
}

impl PartialEq for FourierField {
    fn eq(&self, other: &Self) -> bool {
        self.lattice.same_shape(&other.lattice) && self.amps == other.amps
    }
}

impl FourierField {
    pub fn zeros(lattice: Arc<Lattice>) -> Self {
        let amps = vec![Complex64::new(0.0, 0.0); lattice.len()];
        Self { lattice, amps }
    }

    pub fn from_amps(lattice: Arc<Lattice>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != lattice.len() {
            return Err(invalid(format!(
                "field has {} amplitudes, lattice has {} modes",
                amps.len(),
                lattice.len()
            )));
        }
        Ok(Self { lattice, amps })
    }

    /// Builds a field from a sparse `(mode coordinates, amplitude)` list.
    pub fn from_modes<'a>(
        lattice: Arc<Lattice>,
        entries: impl IntoIterator<Item = (&'a [i32], Complex64)>,
    ) -> Result<Self> {
        let mut field = Self::zeros(lattice);
        for (coords, amp) in entries {
            let idx = field
                .lattice
                .index_of(coords)
                .ok_or_else(|| invalid(format!("mode {coords:?} is outside the lattice box")))?;
            field.amps[idx] += amp;
        }
        Ok(field)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub(crate) fn with_amps(&self, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), self.amps.len());
        Self {
            lattice: Arc::clone(&self.lattice),
            amps,
        }
    }

    pub(crate) fn ensure_same_lattice(&self, other: &FourierField) -> Result<()> {
        self.lattice.ensure_same(&other.lattice)
    }

    /// `|v|_s^2 = sum_k (|k|^{2s} + 1) |v_k|^2`.
    pub fn h_norm_sq(&self, s: f64) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| self.lattice.weight(i, s) * a.norm_sqr())
            .sum()
    }

    pub fn h_norm(&self, s: f64) -> f64 {
        self.h_norm_sq(s).sqrt()
    }

    /// `sum_k |v_k|^2`, which is also `||u||_0^2` under the normalized measure.
    pub fn mass(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `sum_k lambda_k |v_k|^2`.
    pub fn lambda_mass(&self) -> f64 {
        self.amps
            .iter()
            .zip(self.lattice.lambda())
            .map(|(a, &l)| l as f64 * a.norm_sqr())
            .sum()
    }

    pub fn actions(&self) -> ActionVector {
        ActionVector {
            lattice: Arc::clone(&self.lattice),
            actions: self.amps.iter().map(|a| 0.5 * a.norm_sqr()).collect(),
        }
    }

    /// Angle variables `Arg v_k` in `(-pi, pi]`; zero amplitudes map to 0.
    pub fn angles(&self) -> PhaseVector {
        let theta = self
            .amps
            .iter()
            .map(|a| {
                if *a == Complex64::new(0.0, 0.0) {
                    0.0
                } else {
                    let t = a.arg();
                    // atan2 returns -pi for (-x, -0.0)
                    if t == -std::f64::consts::PI {
                        std::f64::consts::PI
                    } else {
                        t
                    }
                }
            })
            .collect();
        PhaseVector {
            lattice: Arc::clone(&self.lattice),
            theta,
        }
    }

    /// `Phi_theta(v)_k = e^{i theta_k} v_k`.
    pub fn phase_rotate(&self, theta: &PhaseVector) -> Result<Self> {
        self.lattice.ensure_same(&theta.lattice)?;
        let amps = self
            .amps
            .iter()
            .zip(&theta.theta)
            .map(|(a, &t)| a * Complex64::cis(t))
            .collect();
        Ok(self.with_amps(amps))
    }

    /// Rotation by `t * Lambda`, i.e. the linear flow of `v' = i Lambda v` at time `t`.
    pub fn rotate_by_lambda(&self, t: f64) -> Self {
        let amps = self
            .amps
            .iter()
            .zip(self.lattice.lambda())
            .map(|(a, &l)| a * Complex64::cis(t * l as f64))
            .collect();
        self.with_amps(amps)
    }

    /// `a_k = e^{-i lambda_k tau / eps} v_k`.
    pub fn interaction_picture(&self, tau: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid(format!("epsilon must be positive, got {eps}")));
        }
        Ok(self.rotate_by_lambda(-tau / eps))
    }

    /// Inverse of [`interaction_picture`](Self::interaction_picture).
    pub fn from_interaction_picture(&self, tau: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid(format!("epsilon must be positive, got {eps}")));
        }
        Ok(self.rotate_by_lambda(tau / eps))
    }

    /// `sum_k conj(v_k) w_k`, the complex l^2 pairing.
    pub fn inner(&self, other: &FourierField) -> Result<Complex64> {
        self.ensure_same_lattice(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn sub(&self, other: &FourierField) -> Result<Self> {
        self.ensure_same_lattice(other)?;
        Ok(self.with_amps(
            self.amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.with_amps(self.amps.iter().map(|a| a * factor).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn to_record(&self) -> FieldRecord {
        FieldRecord {
            lattice: self.lattice.descriptor(),
            amps: self.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn from_record(record: &FieldRecord, lattice: Arc<Lattice>) -> Result<Self> {
        if record.lattice.ordering != ORDERING_VERSION {
            return Err(invalid(format!(
                "field record uses ordering version {}, expected {ORDERING_VERSION}",
                record.lattice.ordering
            )));
        }
        if record.lattice.d != lattice.dim() || record.lattice.cutoff != lattice.cutoff() {
            return Err(Error::LatticeMismatch {
                expected_d: lattice.dim(),
                expected_k: lattice.cutoff(),
                found_d: record.lattice.d,
                found_k: record.lattice.cutoff,
            });
        }
        let amps = record
            .amps
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Self::from_amps(lattice, amps)
    }
}

/// Serialized snapshot: lattice header, then `(re, im)` per mode in lattice order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    #[serde(flatten)]
    pub lattice: LatticeDescriptor,
    pub amps: Vec<[f64; 2]>,
}

/// Action variables `I_k = |v_k|^2 / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionVector {
    lattice: Arc<Lattice>,
    actions: Vec<f64>,
}

impl ActionVector {
    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.actions
    }

    /// Weighted l^1 norm `sum_k 2 (|k|^{2s} + 1) |I_k|`.
    pub fn weighted_norm(&self, s: f64) -> f64 {
        self.actions
            .iter()
            .enumerate()
            .map(|(i, a)| 2.0 * self.lattice.weight(i, s) * a.abs())
            .sum()
    }

    /// `|I - J|~_s`.
    pub fn distance(&self, other: &ActionVector, s: f64) -> Result<f64> {
        self.lattice.ensure_same(&other.lattice)?;
        Ok(self
            .actions
            .iter()
            .zip(&other.actions)
            .enumerate()
            .map(|(i, (a, b))| 2.0 * self.lattice.weight(i, s) * (a - b).abs())
            .sum())
    }
}

/// Per-mode angles, interpreted mod 2 pi.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    lattice: Arc<Lattice>,
    theta: Vec<f64>,
}

impl PhaseVector {
    pub fn new(lattice: Arc<Lattice>, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != lattice.len() {
            return Err(invalid("phase vector length differs from lattice size"));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(invalid("phase vector has non-finite entries"));
        }
        Ok(Self { lattice, theta })
    }

    pub fn zeros(lattice: Arc<Lattice>) -> Self {
        let theta = vec![0.0; lattice.len()];
        Self { lattice, theta }
    }

    /// `theta = t * Lambda`.
    pub fn lambda_flow(lattice: Arc<Lattice>, t: f64) -> Self {
        let theta = lattice.lambda().iter().map(|&l| t * l as f64).collect();
        Self { lattice, theta }
    }

    pub fn values(&self) -> &[f64] {
        &self.theta
    }
}
