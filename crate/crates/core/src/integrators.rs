//! Time integration of the full rescaled system and of the effective
//! system, with checkpointed trajectories and per-checkpoint diagnostics.
//!
//! Both integrators are integrating-factor RK4 schemes. The full system is
//! advanced in the interaction variable `w = e^{-i Lambda tau / eps} v`, with
//! the phases of the rotated nonlinearity evaluated from absolute time; the
//! damping `e^{-mu lambda^m h}` is applied as a per-step integrating factor.
//! With `b = c = 0` both schemes reproduce the linear flow exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{resonant_r_amps, EquationParams, Model};
use crate::error::{invalid, Error, Result};
use crate::spectral::FourierField;

/// Any `|v|_s` above this aborts a run as a blow-up.
pub const BLOWUP_NORM: f64 = 1e6;

const MAX_STEPS_PER_INTERVAL: u64 = 1 << 32;

/// Step-size and sampling controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Fraction of `eps / omega_max` used as the full-system step.
    pub cfl_fraction: f64,
    /// Upper bound on every step; the effective system uses exactly this step
    /// (rounded down to divide the checkpoint interval).
    pub dtau_max: f64,
    /// Sampling interval between checkpoints.
    pub checkpoint_dt: f64,
    /// Rerun effective integrations at half step and record the difference.
    #[serde(default)]
    pub self_check: bool,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            cfl_fraction: 0.1,
            dtau_max: 1e-3,
            checkpoint_dt: 1.0 / 64.0,
            self_check: false,
        }
    }
}

impl StepControl {
    /// Defaults with 64 checkpoints on `[0, horizon]`.
    pub fn for_horizon(horizon: f64) -> Self {
        Self {
            checkpoint_dt: horizon / 64.0,
            ..Self::default()
        }
    }

    pub fn with_checkpoints(mut self, horizon: f64, count: usize) -> Self {
        self.checkpoint_dt = horizon / count.max(1) as f64;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_fraction > 0.0 && self.cfl_fraction <= 1.0) {
            return Err(invalid(format!(
                "cfl_fraction must lie in (0, 1], got {}",
                self.cfl_fraction
            )));
        }
        if !(self.dtau_max > 0.0) || !self.dtau_max.is_finite() {
            return Err(invalid(format!("dtau_max must be positive, got {}", self.dtau_max)));
        }
        if !(self.checkpoint_dt > 0.0) || !self.checkpoint_dt.is_finite() {
            return Err(invalid(format!(
                "checkpoint_dt must be positive, got {}",
                self.checkpoint_dt
            )));
        }
        Ok(())
    }
}

/// Which quantities to record at checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    /// Sobolev indices `s` for which `|v|_s` is recorded.
    pub norms: Vec<f64>,
    /// Record `H_res` (requires tables).
    pub hamiltonian: bool,
    /// Record `E_q` at checkpoints (full runs only).
    pub energy: bool,
    /// Track the largest one-step increase of `E_q` (one extra FFT per step).
    pub energy_per_step: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            norms: vec![0.0, 1.0, 2.0],
            hamiltonian: true,
            energy: true,
            energy_per_step: false,
        }
    }
}

/// Scalar diagnostics at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `(s, |v|_s)` pairs.
    pub norms: Vec<[f64; 2]>,
    /// `sum |v_k|^2`.
    pub h1: f64,
    /// `sum lambda_k |v_k|^2`.
    pub h2: f64,
    /// `||u||_0`.
    pub l2: f64,
    pub h_res: Option<f64>,
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Full,
    Effective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub tau: f64,
    pub field: FourierField,
    pub diagnostics: Diagnostics,
}

/// Per-run step statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub dtau: f64,
    pub steps: u64,
    /// Largest `||u||_0(after) - ||u||_0(before)` over single steps.
    pub max_l2_increase: f64,
    pub max_energy_increase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: RunKind,
    pub params: EquationParams,
    pub control: StepControl,
    pub checkpoints: Vec<Checkpoint>,
    /// Accepted step size for each checkpoint interval.
    pub step_log: Vec<f64>,
    pub stats: StepStats,
    /// Max `|v_h - v_{h/2}|_0` over checkpoints, when the half-step check ran.
    pub self_check: Option<f64>,
}

impl Trajectory {
    pub fn taus(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.tau).collect()
    }

    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("trajectory holds the initial datum")
    }
}

fn diagnostics(model: &Model, v: &FourierField, cfg: &DiagnosticsConfig, kind: RunKind) -> Result<Diagnostics> {
    let h1 = v.mass();
    let h_res = match (cfg.hamiltonian, model.tables()) {
        (true, Some(_)) => Some(model.hamiltonian_res(v)?.re),
        _ => None,
    };
    let energy = if cfg.energy && kind == RunKind::Full {
        Some(model.energy(v)?)
    } else {
        None
    };
    Ok(Diagnostics {
        norms: cfg.norms.iter().map(|&s| [s, v.h_norm(s)]).collect(),
        h1,
        h2: v.lambda_mass(),
        l2: h1.sqrt(),
        h_res,
        energy,
    })
}

/// Divides `[0, horizon]` into checkpoint intervals and each interval into
/// equal steps no longer than `target`.
fn schedule(horizon: f64, control: &StepControl, target: f64) -> Result<(usize, f64, u64, f64)> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let intervals = ((horizon / control.checkpoint_dt).round() as usize).max(1);
    let interval = horizon / intervals as f64;
    let steps = (interval / target).ceil();
    if !(steps.is_finite()) || steps as u64 >= MAX_STEPS_PER_INTERVAL {
        return Err(Error::StepUnderflow(target));
    }
    let steps = (steps as u64).max(1);
    let h = interval / steps as f64;
    if h < 1e-14 * horizon {
        return Err(Error::StepUnderflow(h));
    }
    Ok((intervals, interval, steps, h))
}

/// Step size of the full system: `min(cfl eps / omega_max, dtau_max)`.
pub fn full_step_target(params: &EquationParams, control: &StepControl, omega_max: u64) -> f64 {
    if omega_max == 0 {
        control.dtau_max
    } else {
        (control.cfl_fraction * params.epsilon / omega_max as f64).min(control.dtau_max)
    }
}

/// Largest divisor magnitude over the active nonlinear degrees.
pub fn omega_max(model: &Model) -> Result<u64> {
    if let Some(t) = model.tables() {
        return Ok(t.max_freq());
    }
    let mut best = 0;
    for n in model.params().active_degrees() {
        best = best.max(crate::resonance::divisor_statistics(model.lattice(), n)?.max_freq);
    }
    Ok(best)
}

struct Integrator<'a, F> {
    model: &'a Model,
    /// Nonlinear field in interaction variables at slow time tau.
    field: F,
    /// `e^{-mu lambda^m h}` and its half-step counterpart.
    decay: Vec<f64>,
    decay_half: Vec<f64>,
}

impl<F> Integrator<'_, F>
where
    F: Fn(&[Complex64], f64) -> Vec<Complex64>,
{
    fn step(&self, w: &mut [Complex64], tau: f64, h: f64) {
        let n = w.len();
        let k1 = (self.field)(w, tau);
        let mut stage = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            stage[i] = self.decay_half[i] * (w[i] + 0.5 * h * k1[i]);
        }
        let k2 = (self.field)(&stage, tau + 0.5 * h);
        for i in 0..n {
            stage[i] = self.decay_half[i] * w[i] + 0.5 * h * k2[i];
        }
        let k3 = (self.field)(&stage, tau + 0.5 * h);
        for i in 0..n {
            stage[i] = self.decay[i] * w[i] + h * self.decay_half[i] * k3[i];
        }
        let k4 = (self.field)(&stage, tau + h);
        for i in 0..n {
            w[i] = self.decay[i] * w[i]
                + h / 6.0
                    * (self.decay[i] * k1[i] + 2.0 * self.decay_half[i] * (k2[i] + k3[i]) + k4[i]);
        }
    }
}

/// Converts interaction variables at `tau` back to the state `v`.
type ToState<'a> = dyn Fn(&[Complex64], f64) -> Vec<Complex64> + 'a;

#[allow(clippy::too_many_arguments)]
fn drive<F>(
    kind: RunKind,
    model: &Model,
    v0: &FourierField,
    horizon: f64,
    control: &StepControl,
    diag: &DiagnosticsConfig,
    target: f64,
    field: F,
    to_state: &ToState<'_>,
    from_state: &ToState<'_>,
) -> Result<Trajectory>
where
    F: Fn(&[Complex64], f64) -> Vec<Complex64>,
{
    control.validate()?;
    model.lattice().ensure_same(v0.lattice())?;
    if !v0.is_finite() {
        return Err(invalid("initial datum has non-finite amplitudes"));
    }
    let (intervals, interval, steps, h) = schedule(horizon, control, target)?;
    let params = *model.params();
    let lambda = model.lattice().lambda();
    let integrator = Integrator {
        model,
        field,
        decay: lambda.iter().map(|&l| (-params.damping(l) * h).exp()).collect(),
        decay_half: lambda.iter().map(|&l| (-params.damping(l) * 0.5 * h).exp()).collect(),
    };
    let _ = integrator.model;
    let blowup_s = diag.norms.iter().cloned().fold(0.0, f64::max);

    let mut traj = Trajectory {
        kind,
        params,
        control: *control,
        checkpoints: vec![Checkpoint {
            tau: 0.0,
            field: v0.clone(),
            diagnostics: diagnostics(model, v0, diag, kind)?,
        }],
        step_log: Vec::with_capacity(intervals),
        stats: StepStats {
            dtau: h,
            steps: 0,
            max_l2_increase: f64::NEG_INFINITY,
            max_energy_increase: (diag.energy_per_step && kind == RunKind::Full).then_some(f64::NEG_INFINITY),
        },
        self_check: None,
    };

    let mut w = from_state(v0.amps(), 0.0);
    let mut l2 = v0.mass().sqrt();
    let mut energy = match traj.stats.max_energy_increase {
        Some(_) => Some(model.energy(v0)?),
        None => None,
    };
    for j in 0..intervals {
        let start = j as f64 * interval;
        for i in 0..steps {
            let tau = start + i as f64 * h;
            integrator.step(&mut w, tau, h);
            traj.stats.steps += 1;
            let tau_next = start + (i + 1) as f64 * h;
            let probe = v0.with_amps(w.clone());
            let norm = probe.h_norm(blowup_s);
            if !probe.is_finite() || !norm.is_finite() || norm > BLOWUP_NORM {
                let reason = if probe.is_finite() {
                    format!("|v|_{blowup_s} = {norm:e} exceeds {BLOWUP_NORM:e}")
                } else {
                    "non-finite amplitude".to_string()
                };
                return Err(Error::NumericalAbort {
                    tau: tau_next,
                    reason,
                    partial: Some(Box::new(traj)),
                });
            }
            let new_l2 = probe.mass().sqrt();
            traj.stats.max_l2_increase = traj.stats.max_l2_increase.max(new_l2 - l2);
            l2 = new_l2;
            if let (Some(prev), Some(worst)) = (energy, traj.stats.max_energy_increase.as_mut()) {
                let v = v0.with_amps(to_state(&w, tau_next));
                let e = model.energy(&v)?;
                *worst = worst.max(e - prev);
                energy = Some(e);
            }
        }
        let tau = (j + 1) as f64 * interval;
        let v = v0.with_amps(to_state(&w, tau));
        traj.checkpoints.push(Checkpoint {
            tau,
            diagnostics: diagnostics(model, &v, diag, kind)?,
            field: v,
        });
        traj.step_log.push(h);
    }
    Ok(traj)
}

/// Integrates `v_k' = (i lambda_k / eps - mu lambda_k^m) v_k + P_k(v)` on `[0, horizon]`.
pub fn integrate_full(
    v0: &FourierField,
    horizon: f64,
    model: &Model,
    control: &StepControl,
    diag: &DiagnosticsConfig,
) -> Result<Trajectory> {
    let target = full_step_target(model.params(), control, omega_max(model)?);
    integrate_full_with_step(v0, horizon, model, control, diag, target)
}

/// As [`integrate_full`] with an explicit step-size target.
pub fn integrate_full_with_step(
    v0: &FourierField,
    horizon: f64,
    model: &Model,
    control: &StepControl,
    diag: &DiagnosticsConfig,
    target: f64,
) -> Result<Trajectory> {
    let eps = model.params().epsilon;
    let lambda = model.lattice().lambda().to_vec();
    let rotate = move |x: &[Complex64], tau: f64, sign: f64| -> Vec<Complex64> {
        x.iter()
            .zip(&lambda)
            .map(|(a, &l)| a * Complex64::cis(sign * l as f64 * (tau / eps)))
            .collect()
    };
    let colloc = model.collocation();
    let params = *model.params();
    let field = |w: &[Complex64], tau: f64| {
        let v = rotate(w, tau, 1.0);
        let p = colloc.nonlinearity_amps(&v, &params);
        rotate(&p, tau, -1.0)
    };
    let to_state = |w: &[Complex64], tau: f64| rotate(w, tau, 1.0);
    let from_state = |v: &[Complex64], tau: f64| rotate(v, tau, -1.0);
    drive(
        RunKind::Full,
        model,
        v0,
        horizon,
        control,
        diag,
        target,
        field,
        &to_state,
        &from_state,
    )
}

/// Integrates `a' = F(a) + R(a)` on `[0, horizon]` with step `dtau_max`.
/// Independent of `epsilon`.
pub fn integrate_effective(
    a0: &FourierField,
    horizon: f64,
    model: &Model,
    control: &StepControl,
    diag: &DiagnosticsConfig,
) -> Result<Trajectory> {
    let tables = model.require_tables()?;
    let params = *model.params();
    let field = |w: &[Complex64], _tau: f64| resonant_r_amps(w, tables, &params);
    let identity = |x: &[Complex64], _tau: f64| x.to_vec();
    let mut traj = drive(
        RunKind::Effective,
        model,
        a0,
        horizon,
        control,
        diag,
        control.dtau_max,
        field,
        &identity,
        &identity,
    )?;
    if control.self_check {
        let half = StepControl {
            dtau_max: traj.stats.dtau / 2.0,
            self_check: false,
            ..*control
        };
        let fine = integrate_effective(a0, horizon, model, &half, diag)?;
        let worst = traj
            .checkpoints
            .iter()
            .zip(&fine.checkpoints)
            .map(|(x, y)| x.field.sub(&y.field).map(|d| d.h_norm(0.0)))
            .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))?;
        traj.self_check = Some(worst);
    }
    Ok(traj)
}

/// Running integral of the oscillatory residual
/// `Y(a, tau) - R(a)`, `Y(a, tau) = Phi_{-tau Lambda/eps} P(Phi_{tau Lambda/eps} a)`,
/// along the interaction picture of a full trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub taus: Vec<f64>,
    /// `|int_0^tau (Y - R) dtau'|_{s1}` at each checkpoint.
    pub norms: Vec<f64>,
    pub sup: f64,
    /// `false` when the checkpoint spacing does not resolve the fastest phase:
    /// `spacing * omega_max / eps > 1`.
    pub reliable: bool,
}

pub fn residual_y(traj: &Trajectory, model: &Model, s1: f64) -> Result<ResidualReport> {
    if traj.kind != RunKind::Full {
        return Err(invalid("the residual is defined along full trajectories"));
    }
    let tables = model.require_tables()?;
    let params = traj.params;
    let eps = params.epsilon;
    let colloc = model.collocation();
    let omega = tables.max_freq() as f64;

    let samples: Vec<Vec<Complex64>> = traj
        .checkpoints
        .iter()
        .map(|cp| -> Result<Vec<Complex64>> {
            let v = &cp.field;
            let a = v.interaction_picture(cp.tau, eps)?;
            let p = colloc.nonlinearity_amps(v.amps(), &params);
            let y: Vec<Complex64> = p
                .iter()
                .zip(v.lattice().lambda())
                .map(|(x, &l)| x * Complex64::cis(-(l as f64) * (cp.tau / eps)))
                .collect();
            let r = resonant_r_amps(a.amps(), tables, &params);
            Ok(y.iter().zip(&r).map(|(y, r)| y - r).collect())
        })
        .collect::<Result<_>>()?;

    let lattice = model.lattice();
    let mut acc = vec![Complex64::new(0.0, 0.0); lattice.len()];
    let mut norms = vec![0.0];
    let mut max_spacing = 0.0f64;
    for j in 1..samples.len() {
        let dt = traj.checkpoints[j].tau - traj.checkpoints[j - 1].tau;
        max_spacing = max_spacing.max(dt);
        for (i, a) in acc.iter_mut().enumerate() {
            *a += 0.5 * dt * (samples[j - 1][i] + samples[j][i]);
        }
        let norm = acc
            .iter()
            .enumerate()
            .map(|(i, a)| lattice.weight(i, s1) * a.norm_sqr())
            .sum::<f64>()
            .sqrt();
        norms.push(norm);
    }
    Ok(ResidualReport {
        taus: traj.taus(),
        sup: norms.iter().cloned().fold(0.0, f64::max),
        norms,
        reliable: max_spacing * omega / eps <= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dynamics::ResonantTables;
    use crate::resonance::build_resonance_table;
    use crate::spectral::Lattice;

    fn model(d: usize, k: usize, params: EquationParams) -> Model {
        let l = Arc::new(Lattice::new(d, k).unwrap());
        let tables = ResonantTables::new(
            Arc::new(build_resonance_table(&l, params.p as usize).unwrap()),
            Arc::new(build_resonance_table(&l, params.q as usize).unwrap()),
        );
        Model::new(l, params).unwrap().with_tables(tables).unwrap()
    }

    fn datum(m: &Model) -> FourierField {
        let l = m.lattice().clone();
        let amps = (0..l.len())
            .map(|i| {
                let x = i as f64;
                Complex64::new(0.3 * (1.3 * x).sin(), 0.2 * (0.7 * x).cos()) / (1.0 + l.lambda()[i] as f64)
            })
            .collect();
        FourierField::from_amps(l, amps).unwrap()
    }

    #[test]
    fn control_validation() {
        let mut c = StepControl {
            cfl_fraction: 0.0,
            ..StepControl::default()
        };
        assert!(c.validate().is_err());
        c.cfl_fraction = 1.5;
        assert!(c.validate().is_err());
        let c = StepControl {
            dtau_max: 0.0,
            ..StepControl::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn effective_single_mode_exact_solution() {
        let p = EquationParams::new(0.1, 0.0, 0.0, 1.0, 1, 1, 1).unwrap();
        let m = model(1, 2, p);
        let a0 = FourierField::from_modes(m.lattice().clone(), [(&[0][..], Complex64::new(2.0, 0.0))]).unwrap();
        let t = integrate_effective(&a0, 1.0, &m, &StepControl::for_horizon(1.0), &DiagnosticsConfig::default())
            .unwrap();
        let z = m.lattice().zero_index();
        for cp in &t.checkpoints {
            let exact = Complex64::new(2.0, 0.0) * Complex64::cis(4.0 * cp.tau);
            assert!((cp.field.amps()[z] - exact).norm() < 1e-9);
        }
        assert!((t.last().field.amps()[z].norm() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn identity_flow_without_terms() {
        let p = EquationParams::new(0.1, 0.0, 0.0, 0.0, 1, 1, 1).unwrap();
        let m = model(2, 1, p);
        let a0 = datum(&m);
        let t = integrate_effective(&a0, 0.5, &m, &StepControl::for_horizon(0.5), &DiagnosticsConfig::default())
            .unwrap();
        assert_eq!(t.last().field, a0);
    }

    #[test]
    fn checkpoints_start_at_datum_and_increase() {
        let p = EquationParams::new(0.1, 0.2, -0.5, 1.0, 1, 1, 1).unwrap();
        let m = model(1, 2, p);
        let v0 = datum(&m);
        let t = integrate_full(&v0, 0.25, &m, &StepControl::for_horizon(0.25), &DiagnosticsConfig::default()).unwrap();
        assert_eq!(t.checkpoints.len(), 65);
        assert_eq!(t.checkpoints[0].tau, 0.0);
        assert_eq!(t.checkpoints[0].field, v0);
        assert!(t.taus().windows(2).all(|w| w[0] < w[1]));
        assert!((t.last().tau - 0.25).abs() < 1e-15);
    }

    #[test]
    fn interaction_picture_preserves_actions_along_runs() {
        let p = EquationParams::new(0.05, 0.0, 0.0, 1.0, 1, 1, 1).unwrap();
        let m = model(1, 3, p);
        let t = integrate_full(&datum(&m), 0.2, &m, &StepControl::for_horizon(0.2), &DiagnosticsConfig::default())
            .unwrap();
        for cp in &t.checkpoints {
            let a = cp.field.interaction_picture(cp.tau, p.epsilon).unwrap();
            for (x, y) in a.actions().values().iter().zip(cp.field.actions().values()) {
                assert!((x - y).abs() <= 1e-15 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn blowup_aborts_with_partial_trajectory() {
        // focusing-sign real growth term: |a|' = b |a|^3 blows up at tau = 1/(2 b |a0|^2)
        let p = EquationParams::new(0.1, 0.0, 1.0, 0.0, 1, 1, 1).unwrap();
        let m = model(1, 1, p);
        let a0 = FourierField::from_modes(m.lattice().clone(), [(&[0][..], Complex64::new(3.0, 0.0))]).unwrap();
        let control = StepControl::for_horizon(1.0);
        match integrate_effective(&a0, 1.0, &m, &control, &DiagnosticsConfig::default()) {
            Err(Error::NumericalAbort { tau, partial, .. }) => {
                let partial = partial.expect("partial trajectory");
                assert!(tau < 0.06 && tau > 0.05, "tau = {tau}");
                assert!(partial.last().tau < tau);
                assert!(partial.last().field.is_finite());
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn residual_vanishes_without_nonlinearity() {
        let p = EquationParams::new(0.1, 0.0, 0.0, 0.0, 1, 1, 1).unwrap();
        let m = model(1, 2, p);
        let t = integrate_full(&datum(&m), 0.1, &m, &StepControl::for_horizon(0.1), &DiagnosticsConfig::default())
            .unwrap();
        let r = residual_y(&t, &m, 1.0).unwrap();
        assert_eq!(r.norms[0], 0.0);
        assert!(r.sup == 0.0);
    }

    #[test]
    fn coarse_residual_is_flagged() {
        let p = EquationParams::new(0.01, 0.0, 0.0, 1.0, 1, 1, 1).unwrap();
        let m = model(1, 2, p);
        let t = integrate_full(&datum(&m), 0.1, &m, &StepControl::for_horizon(0.1), &DiagnosticsConfig::default())
            .unwrap();
        assert!(!residual_y(&t, &m, 1.0).unwrap().reliable);
    }

    #[test]
    fn fourth_order_self_convergence() {
        let p = EquationParams::new(0.1, 0.2, -0.5, 1.0, 1, 1, 1).unwrap();
        let m = model(2, 1, p);
        let a0 = datum(&m).scale(Complex64::new(3.0, 0.0));
        let run = |h: f64| {
            let c = StepControl {
                dtau_max: h,
                ..StepControl::for_horizon(0.5).with_checkpoints(0.5, 1)
            };
            integrate_effective(&a0, 0.5, &m, &c, &DiagnosticsConfig::default())
                .unwrap()
                .last()
                .field
                .clone()
        };
        let (a, b, c) = (run(0.025), run(0.0125), run(0.00625));
        let order = (a.sub(&b).unwrap().h_norm(0.0) / b.sub(&c).unwrap().h_norm(0.0)).log2();
        assert!(order > 3.7 && order < 4.3, "observed order {order}");
    }
}
