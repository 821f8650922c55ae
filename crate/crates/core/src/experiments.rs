//! Comparisons between full and effective dynamics: action distances,
//! epsilon ladders with a fitted rate, conservation checks and the 1d closed
//! form of the cubic resonant field.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{resonant_sum, EquationParams, Model};
use crate::error::{invalid, Error, Result};
use crate::integrators::{
    integrate_effective, integrate_full, Diagnostics, DiagnosticsConfig, RunKind, StepControl, Trajectory,
};
use crate::resonance::ResonanceTable;
use crate::spectral::FourierField;

pub use crate::dynamics::hamiltonian_res;

/// Ladders whose largest sup error is at or below this are reported as
/// degenerate and no exponent is fitted.
pub const DEGENERATE_SUP: f64 = 1e-10;

/// Action distance `e(tau) = |I(v(tau)) - I(a(tau))|~_{s1}` along aligned
/// checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub params: EquationParams,
    pub epsilon: f64,
    pub s1: f64,
    pub taus: Vec<f64>,
    pub errors: Vec<f64>,
    pub sup: f64,
}

pub fn compare_actions(full: &Trajectory, effective: &Trajectory, s1: f64) -> Result<ComparisonReport> {
    if full.checkpoints.len() != effective.checkpoints.len() {
        return Err(invalid(format!(
            "checkpoint counts differ: {} vs {}",
            full.checkpoints.len(),
            effective.checkpoints.len()
        )));
    }
    let mut taus = Vec::with_capacity(full.checkpoints.len());
    let mut errors = Vec::with_capacity(full.checkpoints.len());
    for (x, y) in full.checkpoints.iter().zip(&effective.checkpoints) {
        if (x.tau - y.tau).abs() > 1e-12 * (1.0 + x.tau.abs()) {
            return Err(invalid(format!("checkpoints misaligned at tau {} vs {}", x.tau, y.tau)));
        }
        taus.push(x.tau);
        errors.push(x.field.actions().distance(&y.field.actions(), s1)?);
    }
    Ok(ComparisonReport {
        params: full.params,
        epsilon: full.params.epsilon,
        s1,
        sup: errors.iter().cloned().fold(0.0, f64::max),
        taus,
        errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderConfig {
    pub horizon: f64,
    pub s1: f64,
    pub control: StepControl,
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderResult {
    /// Rungs whose full run completed, in ladder order.
    pub epsilons: Vec<f64>,
    pub sups: Vec<f64>,
    pub reports: Vec<ComparisonReport>,
    /// Least-squares slope of `log sup` against `log eps`; `None` when degenerate.
    pub fitted_exponent: Option<f64>,
    /// `max / min` of `sup / sqrt(eps)` over the ladder.
    pub sqrt_ratio_spread: f64,
    /// Whether the sup errors strictly decrease along the ladder.
    pub monotone: bool,
    pub degenerate: bool,
    pub effective: Trajectory,
    pub full: Vec<Trajectory>,
    /// Rungs whose full run aborted, with the reason; a non-empty list marks
    /// the ladder incomplete.
    pub aborted: Vec<(f64, String)>,
}

impl LadderResult {
    pub fn complete(&self) -> bool {
        self.aborted.is_empty()
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Runs the effective system once and the full system for each `eps`
/// (in parallel), and compares actions on the shared checkpoint schedule.
/// `epsilons` must hold at least three strictly decreasing values.
pub fn epsilon_ladder(
    datum: &FourierField,
    epsilons: &[f64],
    model: &Model,
    config: &LadderConfig,
) -> Result<LadderResult> {
    if epsilons.len() < 3 {
        return Err(invalid("an epsilon ladder needs at least three values"));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) || epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(invalid("ladder epsilons must be positive and strictly decreasing"));
    }
    let effective = integrate_effective(datum, config.horizon, model, &config.control, &config.diagnostics)?;
    let runs: Vec<Result<Trajectory>> = epsilons
        .par_iter()
        .map(|&eps| {
            let m = model.with_epsilon(eps)?;
            integrate_full(datum, config.horizon, &m, &config.control, &config.diagnostics)
        })
        .collect();
    let mut full = Vec::new();
    let mut kept = Vec::new();
    let mut aborted = Vec::new();
    for (&eps, run) in epsilons.iter().zip(runs) {
        match run {
            Ok(t) => {
                kept.push(eps);
                full.push(t);
            }
            Err(Error::NumericalAbort { tau, reason, .. }) => {
                aborted.push((eps, format!("aborted at tau={tau}: {reason}")));
            }
            Err(e) => return Err(e),
        }
    }
    let epsilons = kept.as_slice();
    let reports = full
        .iter()
        .map(|t| compare_actions(t, &effective, config.s1))
        .collect::<Result<Vec<_>>>()?;
    let sups: Vec<f64> = reports.iter().map(|r| r.sup).collect();
    let degenerate = sups.iter().cloned().fold(0.0, f64::max) <= DEGENERATE_SUP;
    let fitted_exponent = if degenerate || sups.len() < 3 {
        None
    } else {
        let lx: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
        let ly: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
        fit_slope(&lx, &ly)
    };
    let scaled: Vec<f64> = sups.iter().zip(epsilons).map(|(s, e)| s / e.sqrt()).collect();
    let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(LadderResult {
        epsilons: epsilons.to_vec(),
        monotone: sups.windows(2).all(|w| w[1] < w[0]),
        sups,
        reports,
        fitted_exponent,
        sqrt_ratio_spread: hi / lo,
        degenerate,
        effective,
        full,
        aborted,
    })
}

/// Tolerances for [`conservation_suite`]. Drifts are relative to the value
/// at `tau = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `H1`, `H2` along effective runs and `||u||_0` along full runs.
    pub invariant: f64,
    /// `H_res` along effective runs and `E_q` along full runs.
    pub hamiltonian: f64,
    /// Allowed relative increase per step (per checkpoint interval for
    /// effective runs) of a quantity that must be nonincreasing.
    pub monotone_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            invariant: 1e-8,
            hamiltonian: 1e-6,
            monotone_step: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Conserved,
    Nonincreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationCheck {
    pub quantity: String,
    pub kind: CheckKind,
    /// Max relative drift (conserved) or max relative increase (nonincreasing).
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks that apply to one trajectory. Quantities are conserved only when
/// `mu = b = 0`. Otherwise, with `b <= 0` the mass is nonincreasing, and for
/// full runs with `m = 1, c >= 0` so is `E_q` (checked per step when the run
/// recorded per-step energies). `E_q` is not monotone in general: a constant
/// field with `b < 0, c < 0` loses mass and gains energy. Runs with `b > 0`
/// have no applicable checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub kind: RunKind,
    pub checks: Vec<ConservationCheck>,
}

impl ConservationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn relative_drift(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut it = values.into_iter();
    let Some(first) = it.next() else { return 0.0 };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    it.map(|x| (x - first).abs() / scale).fold(0.0, f64::max)
}

fn check(quantity: &str, kind: CheckKind, value: f64, tolerance: f64) -> ConservationCheck {
    ConservationCheck {
        quantity: quantity.into(),
        kind,
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

pub fn conservation_suite(traj: &Trajectory, tol: &Tolerances) -> ConservationReport {
    let p = traj.params;
    let diags: Vec<&Diagnostics> = traj.checkpoints.iter().map(|c| &c.diagnostics).collect();
    let series = |f: fn(&Diagnostics) -> Option<f64>| -> Option<Vec<f64>> { diags.iter().map(|d| f(d)).collect() };
    let mut checks = Vec::new();
    let conservative = p.mu == 0.0 && p.b == 0.0;
    let dissipative = !conservative && p.b <= 0.0;
    match traj.kind {
        RunKind::Effective if conservative => {
            checks.push(check("H1", CheckKind::Conserved, relative_drift(diags.iter().map(|d| d.h1)), tol.invariant));
            checks.push(check("H2", CheckKind::Conserved, relative_drift(diags.iter().map(|d| d.h2)), tol.invariant));
            if let Some(h) = series(|d| d.h_res) {
                checks.push(check("H_res", CheckKind::Conserved, relative_drift(h), tol.hamiltonian));
            }
        }
        RunKind::Full if conservative => {
            checks.push(check("l2", CheckKind::Conserved, relative_drift(diags.iter().map(|d| d.l2)), tol.invariant));
            if let Some(e) = series(|d| d.energy) {
                checks.push(check("E_q", CheckKind::Conserved, relative_drift(e), tol.hamiltonian));
            }
        }
        RunKind::Full if dissipative => {
            let scale = diags[0].l2.max(f64::MIN_POSITIVE);
            checks.push(check(
                "l2",
                CheckKind::Nonincreasing,
                traj.stats.max_l2_increase / scale,
                tol.monotone_step,
            ));
            if let (true, Some(worst)) = (p.m == 1 && p.c >= 0.0, traj.stats.max_energy_increase) {
                let scale = diags[0].energy.unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
                checks.push(check("E_q", CheckKind::Nonincreasing, worst / scale, tol.monotone_step));
            }
        }
        RunKind::Effective if dissipative => {
            let scale = diags[0].l2.max(f64::MIN_POSITIVE);
            let worst = diags
                .windows(2)
                .map(|w| (w[1].l2 - w[0].l2) / scale)
                .fold(f64::NEG_INFINITY, f64::max);
            checks.push(check("l2", CheckKind::Nonincreasing, worst, tol.monotone_step));
        }
        _ => {}
    }
    ConservationReport { kind: traj.kind, checks }
}

/// Largest deviation between the cubic resonant sum on a 1d box and its
/// closed form `2 v_k sum_m |v_m|^2 - v_k |v_k|^2`.
pub fn closed_form_check_1d(v: &FourierField, table: &ResonanceTable) -> Result<f64> {
    if v.lattice().dim() != 1 || table.degree != 1 {
        return Err(invalid("closed form applies to the cubic sum in one dimension"));
    }
    let r = resonant_sum(v, table)?;
    let mass = v.amps().iter().map(|a| a.norm_sqr()).sum::<f64>();
    Ok(r.amps()
        .iter()
        .zip(v.amps())
        .map(|(r, a)| {
            let closed: Complex64 = a * (2.0 * mass - a.norm_sqr());
            (r - closed).norm()
        })
        .fold(0.0, f64::max))
}
