//! TOML run configuration shared by the CLI subcommands.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::EquationParams;
use crate::error::{Error, Result};
use crate::integrators::{DiagnosticsConfig, StepControl};
use crate::spectral::{FourierField, Lattice};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub d: usize,
    #[serde(rename = "K")]
    pub cutoff: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    /// Single epsilon for `simulate` and `conserve`.
    pub epsilon: Option<f64>,
    /// Decreasing ladder for `compare`.
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default = "one")]
    pub m: u32,
    #[serde(default = "one")]
    pub p: u32,
    #[serde(default = "one")]
    pub q: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub k: Vec<i32>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSection {
    pub modes: Vec<ModeEntry>,
    /// Rescale the datum so that `|v|_s` equals `normalize[1]` with `s = normalize[0]`.
    pub normalize: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Full,
    Effective,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: f64,
    /// Regularity index of the datum.
    #[serde(default = "default_s")]
    pub s: f64,
    /// Index of the action norm used in comparisons; `d/2 < s1 <= s`.
    #[serde(default = "default_s")]
    pub s1: f64,
    /// Indices `s` of the `|v|_s` diagnostics; defaults to `[0, s1, s]`.
    pub norms: Option<Vec<f64>>,
    #[serde(default = "default_mode")]
    pub mode: RunMode,
}

fn default_s() -> f64 {
    2.0
}

fn default_mode() -> RunMode {
    RunMode::Both
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default = "default_cfl")]
    pub cfl_fraction: f64,
    #[serde(default = "default_dtau_max")]
    pub dtau_max: f64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default)]
    pub self_check: bool,
}

fn default_cfl() -> f64 {
    StepControl::default().cfl_fraction
}

fn default_dtau_max() -> f64 {
    StepControl::default().dtau_max
}

fn default_checkpoints() -> usize {
    64
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            cfl_fraction: default_cfl(),
            dtau_max: default_dtau_max(),
            checkpoints: default_checkpoints(),
            self_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToggleSection {
    #[serde(default = "yes")]
    pub hamiltonian: bool,
    #[serde(default = "yes")]
    pub energy: bool,
    #[serde(default)]
    pub energy_per_step: bool,
    /// `simulate`: also write the oscillatory residual along the full run.
    #[serde(default)]
    pub residual: bool,
    /// `simulate`: also run the conservation checks on each trajectory.
    #[serde(default)]
    pub conservation: bool,
}

fn yes() -> bool {
    true
}

impl Default for ToggleSection {
    fn default() -> Self {
        Self {
            hamiltonian: true,
            energy: true,
            energy_per_step: false,
            residual: false,
            conservation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub params: ParamsSection,
    pub datum: Option<DatumSection>,
    pub run: Option<RunSection>,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub toggles: ToggleSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let lattice = self.lattice()?;
        let p = &self.params;
        if let Some(eps) = &p.epsilons {
            if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(config_err("params.epsilons must be positive and strictly decreasing"));
            }
        }
        if p.epsilon.is_none() && p.epsilons.is_none() {
            return Err(config_err("give params.epsilon or params.epsilons"));
        }
        EquationParams::new(self.params.epsilon.unwrap_or(1.0), p.mu, p.b, p.c, p.m, p.p, p.q)
            .map_err(|e| config_err(e.to_string()))?;
        if let Some(datum) = &self.datum {
            for m in &datum.modes {
                if m.k.len() != lattice.dim() || lattice.index_of(&m.k).is_none() {
                    return Err(config_err(format!("datum mode {:?} lies outside the lattice", m.k)));
                }
                if !m.re.is_finite() || !m.im.is_finite() {
                    return Err(config_err(format!("datum mode {:?} is not finite", m.k)));
                }
            }
        }
        if let Some(run) = &self.run {
            if !(run.horizon > 0.0) || !run.horizon.is_finite() {
                return Err(config_err("run.horizon must be positive"));
            }
            let half_d = lattice.dim() as f64 / 2.0;
            if !(run.s1 > half_d && run.s1 <= run.s) {
                return Err(config_err(format!(
                    "need d/2 < s1 <= s, got d={}, s1={}, s={}",
                    lattice.dim(),
                    run.s1,
                    run.s
                )));
            }
        }
        if self.control.checkpoints == 0 {
            return Err(config_err("control.checkpoints must be positive"));
        }
        self.step_control(1.0)
            .validate()
            .map_err(|e| config_err(e.to_string()))
    }

    pub fn lattice(&self) -> Result<Arc<Lattice>> {
        Lattice::new(self.lattice.d, self.lattice.cutoff)
            .map(Arc::new)
            .map_err(|e| config_err(e.to_string()))
    }

    /// Parameters at the configured single `epsilon`.
    pub fn params(&self) -> Result<EquationParams> {
        let eps = self
            .params
            .epsilon
            .ok_or_else(|| config_err("params.epsilon is required"))?;
        self.params_at(eps)
    }

    pub fn params_at(&self, epsilon: f64) -> Result<EquationParams> {
        let p = &self.params;
        EquationParams::new(epsilon, p.mu, p.b, p.c, p.m, p.p, p.q).map_err(|e| config_err(e.to_string()))
    }

    pub fn epsilons(&self) -> Result<Vec<f64>> {
        self.params
            .epsilons
            .clone()
            .ok_or_else(|| config_err("params.epsilons is required"))
    }

    pub fn run_section(&self) -> Result<&RunSection> {
        self.run.as_ref().ok_or_else(|| config_err("[run] section is required"))
    }

    pub fn datum(&self, lattice: &Arc<Lattice>) -> Result<FourierField> {
        let datum = self
            .datum
            .as_ref()
            .ok_or_else(|| config_err("[datum] section is required"))?;
        let field = FourierField::from_modes(
            lattice.clone(),
            datum
                .modes
                .iter()
                .map(|m| (m.k.as_slice(), Complex64::new(m.re, m.im))),
        )
        .map_err(|e| config_err(e.to_string()))?;
        match datum.normalize {
            None => Ok(field),
            Some([s, target]) => {
                let norm = field.h_norm(s);
                if norm == 0.0 {
                    return Err(config_err("cannot normalize a zero datum"));
                }
                Ok(field.scale(Complex64::new(target / norm, 0.0)))
            }
        }
    }

    pub fn step_control(&self, horizon: f64) -> StepControl {
        StepControl {
            cfl_fraction: self.control.cfl_fraction,
            dtau_max: self.control.dtau_max,
            checkpoint_dt: horizon / self.control.checkpoints.max(1) as f64,
            self_check: self.control.self_check,
        }
    }

    pub fn diagnostics(&self) -> DiagnosticsConfig {
        DiagnosticsConfig {
            norms: match &self.run {
                None => vec![0.0, default_s()],
                Some(RunSection { norms: Some(n), .. }) => n.clone(),
                Some(r) => {
                    let mut n = vec![0.0, r.s1, r.s];
                    n.dedup();
                    n
                }
            },
            hamiltonian: self.toggles.hamiltonian,
            energy: self.toggles.energy,
            energy_per_step: self.toggles.energy_per_step,
        }
    }

    /// SHA-256 (hex) of the canonical JSON form of the parsed configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(canonical))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[lattice]
d = 1
K = 4

[params]
epsilon = 0.05
c = 1.0

[datum]
modes = [{ k = [0], re = 0.5 }, { k = [1], im = 0.25 }]
normalize = [2.0, 1.0]

[run]
horizon = 1.0
s1 = 2.0
"#;

    #[test]
    fn parses_and_builds_datum() {
        let cfg = RunConfig::from_toml_str(SAMPLE).unwrap();
        let l = cfg.lattice().unwrap();
        let v = cfg.datum(&l).unwrap();
        assert!((v.h_norm(2.0) - 1.0).abs() < 1e-15);
        assert_eq!(cfg.params().unwrap().c, 1.0);
        assert_eq!(cfg.run_section().unwrap().mode, RunMode::Both);
        assert_eq!(cfg.control.checkpoints, 64);
        assert_eq!(cfg.diagnostics().norms, vec![0.0, 2.0]);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::from_toml_str(SAMPLE).unwrap();
        let b = RunConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = RunConfig::from_toml_str(&SAMPLE.replace("0.05", "0.025")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            SAMPLE.replace("k = [1]", "k = [7]"),
            SAMPLE.replace("epsilon = 0.05", "epsilon = -1.0"),
            SAMPLE.replace("horizon = 1.0", "horizon = 0.0"),
            SAMPLE.replace("c = 1.0", "c = 1.0\nnu = 2.0"),
            SAMPLE.replace("s1 = 2.0", "s1 = 2.5"),
            SAMPLE.replace("s1 = 2.0", "s1 = 0.5"),
            SAMPLE.replace("epsilon = 0.05", "epsilons = [0.1, 0.2, 0.05]"),
            format!("{SAMPLE}\n[control]\ncfl_fraction = 2.0\n"),
        ] {
            assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
