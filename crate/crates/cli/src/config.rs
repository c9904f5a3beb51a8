//! Experiment configuration files (TOML). Unknown keys are rejected.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid: Option<GridSection>,
    pub solver: Option<SolverSection>,
    pub initial: Option<InitialCondition>,
    pub renorm: Option<RenormSection>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    pub transform: Option<TransformSection>,
    pub verify: Option<VerifySection>,
    pub profile: Option<ProfileSection>,
}

fn two_thirds() -> f64 {
    2.0 / 3.0
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    #[serde(default = "two_thirds")]
    pub dealias_fraction: f64,
    /// Box side; 2π when absent.
    pub domain_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub viscosity: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "half")]
    pub cfl_max: f64,
    pub tail_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    TaylorGreen {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Abc {
        a: f64,
        b: f64,
        c: f64,
    },
    Shear {
        #[serde(default = "one")]
        amplitude: f64,
    },
    SnapshotFile {
        path: PathBuf,
    },
    RandomSolenoidal {
        seed: Option<u64>,
        band: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenormMode {
    /// `b = sign·γ‖∇V‖∞`.
    Gradient,
    /// `b = γ‖Ω‖⁴_{L²}`.
    Enstrophy,
    /// `μ = (T−t)^{−γ}` prescribed in advance.
    PowerLaw,
}

fn plus() -> i8 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormSection {
    pub alpha: f64,
    pub mode: RenormMode,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "plus")]
    pub sign: i8,
    pub t_blow: Option<f64>,
}

fn default_p_list() -> Vec<f64> {
    vec![2.0, f64::INFINITY]
}

fn frobenius() -> String {
    "frobenius".into()
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    #[serde(default = "frobenius")]
    pub grad_norm: String,
    /// Log every `stride` steps.
    #[serde(default = "one_usize")]
    pub stride: usize,
    /// Write a snapshot every this many steps; initial and final states are
    /// always written.
    pub snapshot_every: Option<usize>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            p_list: default_p_list(),
            grad_norm: frobenius(),
            stride: 1,
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuFamily {
    Constant,
    PowerLaw,
    ExpGradient,
    ExpEnstrophy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuSection {
    pub family: MuFamily,
    /// `μ ≡ value` for the constant family.
    pub value: Option<f64>,
    pub t_blow: Option<f64>,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "plus")]
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSection {
    pub alpha: f64,
    pub mu: MuSection,
    /// Window half-width in `y`.
    pub radius: f64,
    /// Window lattice points per axis.
    pub n: usize,
}

fn default_gammas() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

fn default_alphas() -> Vec<f64> {
    vec![1.0]
}

fn default_tol() -> f64 {
    bulb_core::verify::DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Inequality ids to check; every applicable one when absent.
    pub checks: Option<Vec<String>>,
    /// Vorticity exponents to check; the log's own list when absent.
    pub p_list: Option<Vec<f64>>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub t0: f64,
    /// Horizon `T` for the blow-up-time estimates; defaults past the log end.
    pub t_blow: Option<f64>,
    pub m0: Option<f64>,
    pub c0: Option<f64>,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            checks: None,
            p_list: None,
            gammas: default_gammas(),
            alphas: default_alphas(),
            tol: default_tol(),
            t0: 0.0,
            t_blow: None,
            m0: None,
            c0: None,
        }
    }
}

fn two() -> f64 {
    2.0
}

fn default_system() -> String {
    "1.4".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSection {
    Whole,
    Fixed { radius: f64 },
    PowerLaw { t_blow: f64, gamma: f64 },
}

impl Default for WindowSection {
    fn default() -> Self {
        WindowSection::Whole
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "default_system")]
    pub system: String,
    #[serde(default)]
    pub window: WindowSection,
    /// Seed of the test-function directions.
    pub test_seed: Option<u64>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            p: 2.0,
            system: default_system(),
            window: WindowSection::Whole,
            test_seed: None,
        }
    }
}

fn field_err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses and validates `path`; relative file references are resolved
    /// against the directory holding the config.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(InitialCondition::SnapshotFile { path: p }) = &mut cfg.initial {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.diagnostics;
        if d.p_list.is_empty() {
            return Err(field_err("diagnostics.p_list", "must not be empty"));
        }
        if let Some(p) = d.p_list.iter().find(|p| !(**p > 0.0)) {
            return Err(field_err("diagnostics.p_list", format!("exponents must be positive, got {p}")));
        }
        if bulb_core::diagnostics::GradNorm::parse(&d.grad_norm).is_none() {
            return Err(field_err(
                "diagnostics.grad_norm",
                format!("unknown convention '{}' (frobenius, max_row_sum, dominant)", d.grad_norm),
            ));
        }
        if d.stride == 0 {
            return Err(field_err("diagnostics.stride", "must be at least 1"));
        }
        if d.snapshot_every == Some(0) {
            return Err(field_err("diagnostics.snapshot_every", "must be at least 1"));
        }
        if let Some(g) = &self.grid {
            self.grid_spec_of(g)?;
        }
        if let Some(s) = &self.solver {
            if !(s.dt > 0.0) {
                return Err(field_err("solver.dt", format!("must be positive, got {}", s.dt)));
            }
            if !(s.viscosity >= 0.0) {
                return Err(field_err("solver.viscosity", format!("must be non-negative, got {}", s.viscosity)));
            }
            if !(s.cfl_max > 0.0 && s.cfl_max <= 1.0) {
                return Err(field_err("solver.cfl_max", format!("must lie in (0, 1], got {}", s.cfl_max)));
            }
            if !s.t_end.is_finite() {
                return Err(field_err("solver.t_end", "must be finite"));
            }
        }
        match &self.initial {
            Some(InitialCondition::SnapshotFile { path }) if !path.exists() => {
                return Err(field_err("initial.path", format!("{} does not exist", path.display())));
            }
            Some(InitialCondition::RandomSolenoidal { band: 0, .. }) => {
                return Err(field_err("initial.band", "must be at least 1"));
            }
            _ => {}
        }
        if let Some(r) = &self.renorm {
            if !(r.alpha > -1.0) {
                return Err(field_err("renorm.alpha", format!("must exceed -1, got {}", r.alpha)));
            }
            if r.sign != 1 && r.sign != -1 {
                return Err(field_err("renorm.sign", "must be +1 or -1"));
            }
            if r.mode == RenormMode::PowerLaw && r.t_blow.map_or(true, |t| !(t > 0.0)) {
                return Err(field_err("renorm.t_blow", "power_law mode needs a positive t_blow"));
            }
        }
        if let Some(t) = &self.transform {
            if !(t.radius > 0.0) {
                return Err(field_err("transform.radius", "must be positive"));
            }
            if !(t.alpha > -1.0) {
                return Err(field_err("transform.alpha", "must exceed -1"));
            }
        }
        if let Some(v) = &self.verify {
            if !(v.tol > 0.0) {
                return Err(field_err("verify.tol", format!("must be positive, got {}", v.tol)));
            }
            if v.gammas.iter().any(|g| !(*g >= 1.0)) {
                return Err(field_err("verify.gammas", "every gamma must be at least 1"));
            }
        }
        if let Some(p) = &self.profile {
            if !(p.p > 0.0) {
                return Err(field_err("profile.p", "must be positive"));
            }
            if bulb_core::profile::StationarySystem::parse(&p.system).is_none() {
                return Err(field_err(
                    "profile.system",
                    format!("unknown system '{}' (1.4, 2.18, 3.1a, weak-euler-limit)", p.system),
                ));
            }
        }
        Ok(())
    }

    fn grid_spec_of(&self, g: &GridSection) -> Result<bulb_core::spectral::GridSpec, CliError> {
        let spec = bulb_core::spectral::GridSpec::new(g.n)
            .and_then(|s| s.with_domain_length(g.domain_length.unwrap_or(2.0 * PI)))
            .and_then(|s| s.with_dealias_fraction(g.dealias_fraction))
            .map_err(|e| field_err("grid", e.to_string()))?;
        Ok(spec)
    }

    pub fn grid_spec(&self) -> Result<bulb_core::spectral::GridSpec, CliError> {
        let g = self.grid.as_ref().ok_or_else(|| field_err("grid", "section is required"))?;
        self.grid_spec_of(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TG: &str = r#"
output_dir = "runs/tg"
[grid]
n = 16
[solver]
viscosity = 0.0
dt = 0.01
t_end = 0.1
[initial]
kind = "taylor_green"
[diagnostics]
p_list = [1.0, 2.0, inf]
grad_norm = "dominant"
"#;

    #[test]
    fn parses_and_validates() {
        let c = ExperimentConfig::parse(TG).unwrap();
        c.validate().unwrap();
        assert_eq!(c.diagnostics.p_list[2], f64::INFINITY);
        assert_eq!(c.initial, Some(InitialCondition::TaylorGreen { amplitude: 1.0 }));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e = ExperimentConfig::parse(&TG.replace("dt = 0.01", "dt = 0.01\ndtt = 1")).unwrap_err();
        assert!(e.to_string().contains("dtt"), "{e}");
        let e = ExperimentConfig::parse(&TG.replace("kind = \"taylor_green\"", "kind = \"taylor_green\"\namp = 2")).unwrap_err();
        assert!(e.to_string().contains("amp"), "{e}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let c = ExperimentConfig::parse(&TG.replace("p_list = [1.0, 2.0, inf]", "p_list = []")).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("diagnostics.p_list"));
        let c = ExperimentConfig::parse(&TG.replace("dt = 0.01", "dt = -1.0")).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("solver.dt"));
    }
}
