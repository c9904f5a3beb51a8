use std::collections::BTreeMap;
use std::path::Path;

use bulb_core::diagnostics::{Frame, GradNorm, LogMeta, TrajectoryLog};
use bulb_core::init::{abc, random_solenoidal, shear, taylor_green};
use bulb_core::profile::Provenance;
use bulb_core::similarity::{MuSchedule, SimilarityMap};
use bulb_core::solver::{
    run, CoefficientSchedule, DriftMode, RenormSpec, SimState, SolverConfig, SolverError, StageInfo, StepObserver,
    Termination,
};
use bulb_core::spectral::{dealias, leray_project, Field};
use log::info;
use serde::Serialize;

use super::{create_dir, echo, write_json, LOG_FILE, SNAPSHOT_DIR};
use crate::config::{ExperimentConfig, InitialCondition, RenormMode};
use crate::error::CliError;
use crate::manifest::{git_hash, Manifest};
use crate::snapshot::{Snapshot, SnapshotMeta};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub manifest: String,
    pub termination: String,
    pub t_final: f64,
    pub steps: u64,
    pub log_rows: usize,
    pub snapshots: Vec<String>,
}

fn cfg_err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn numerical(e: impl ToString) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Snapshot header template for states of this run.
#[derive(Clone)]
struct HeaderTemplate {
    viscosity: f64,
    renorm: Option<(f64, u8, [f64; 3])>,
    manifest: [u8; 32],
}

impl HeaderTemplate {
    fn meta(&self, st: &SimState) -> SnapshotMeta {
        let mut m = SnapshotMeta::physical(st.time, self.viscosity);
        m.manifest = self.manifest;
        m.provenance = Provenance::RunLimit;
        if let Some((alpha, fam, params)) = self.renorm {
            m.frame = Frame::Renormalized;
            m.alpha = alpha;
            m.mu_family = fam;
            m.mu_params = params;
            m.phys_time = st.phys_time;
            m.log_mu = st.log_mu;
        }
        m
    }
}

struct SnapshotWriter<'a> {
    every: u64,
    dir: &'a Path,
    header: HeaderTemplate,
    written: Vec<String>,
}

impl SnapshotWriter<'_> {
    fn write(&mut self, st: &SimState) -> Result<(), CliError> {
        let name = format!("snap_{:06}.bulb", st.step_count);
        if self.written.last() == Some(&name) {
            return Ok(());
        }
        Snapshot {
            meta: self.header.meta(st),
            field: st.velocity.clone(),
        }
        .write(&self.dir.join(&name))?;
        self.written.push(name);
        Ok(())
    }
}

impl StepObserver for SnapshotWriter<'_> {
    fn stage(&mut self, _: &StageInfo<'_>) -> Result<(), SolverError> {
        Ok(())
    }

    fn commit(&mut self, st: &SimState) -> Result<(), SolverError> {
        if st.step_count % self.every == 0 {
            self.write(st).map_err(|e| SolverError::Observer(e.to_string()))?;
        }
        Ok(())
    }
}

fn initial_field(cfg: &ExperimentConfig, inputs: &mut BTreeMap<String, String>) -> Result<Field, CliError> {
    let grid = cfg.grid_spec()?;
    let init = cfg.initial.as_ref().ok_or_else(|| cfg_err("initial", "section is required"))?;
    let f = match init {
        InitialCondition::TaylorGreen { amplitude } => taylor_green(grid, *amplitude),
        InitialCondition::Abc { a, b, c } => abc(grid, *a, *b, *c),
        InitialCondition::Shear { amplitude } => shear(grid, *amplitude),
        InitialCondition::RandomSolenoidal { seed, band, amplitude } => {
            random_solenoidal(grid, seed.or(cfg.seed).unwrap_or(0), *band, *amplitude)
        }
        InitialCondition::SnapshotFile { path } => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            inputs.insert("initial".into(), git_hash(&bytes));
            let s = Snapshot::from_bytes(&bytes, grid.dealias_fraction).map_err(|message| CliError::Snapshot {
                path: path.display().to_string(),
                message,
            })?;
            if s.meta.frame != Frame::Physical {
                return Err(cfg_err("initial.path", "snapshot is not in the physical frame"));
            }
            let g = *s.field.grid();
            if g.n != grid.n || (g.domain_length - grid.domain_length).abs() > 1e-12 * grid.domain_length {
                return Err(cfg_err(
                    "initial.path",
                    format!("snapshot lattice n = {} L = {} does not match [grid]", g.n, g.domain_length),
                ));
            }
            Ok(s.field.with_grid(grid).map_err(numerical)?)
        }
    };
    f.map_err(numerical)
}

fn solver_config(cfg: &ExperimentConfig, norm: GradNorm) -> Result<(SolverConfig, HeaderTemplate), CliError> {
    let s = cfg.solver.as_ref().ok_or_else(|| cfg_err("solver", "section is required"))?;
    let mut sc = SolverConfig::new(s.viscosity, s.dt, s.t_end);
    sc.cfl_max = s.cfl_max;
    sc.tail_threshold = s.tail_threshold;
    let mut header = HeaderTemplate {
        viscosity: s.viscosity,
        renorm: None,
        manifest: [0; 32],
    };
    if let Some(r) = &cfg.renorm {
        let (mode, fam, params) = match r.mode {
            RenormMode::Gradient => (
                DriftMode::SelfConsistentGradient {
                    gamma: r.gamma,
                    sign: r.sign,
                    norm,
                },
                2,
                [r.gamma, r.sign as f64, 0.0],
            ),
            RenormMode::Enstrophy => (DriftMode::SelfConsistentEnstrophy { gamma: r.gamma }, 3, [r.gamma, 0.0, 0.0]),
            RenormMode::PowerLaw => {
                let t_blow = r.t_blow.unwrap_or(1.0);
                let mu = MuSchedule::power_law(t_blow, r.gamma).map_err(|e| cfg_err("renorm", e.to_string()))?;
                let map = SimilarityMap::new(mu, r.alpha).map_err(|e| cfg_err("renorm", e.to_string()))?;
                let b = CoefficientSchedule::new(move |s| map.power_law_drift_in_s(s).unwrap_or(f64::NAN));
                (DriftMode::Prescribed(b), 1, [t_blow, r.gamma, 0.0])
            }
        };
        header.renorm = Some((r.alpha, fam, params));
        sc = sc.with_renorm(RenormSpec { alpha: r.alpha, mode });
    }
    sc.validate().map_err(|e| cfg_err("solver", e.to_string()))?;
    Ok((sc, header))
}

/// Runs the configured experiment into `out`: `log.csv`, `manifest.json`,
/// `run.json` and snapshots under `snapshots/` (initial, every
/// `snapshot_every` steps, final).
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<SimulateSummary, CliError> {
    cfg.validate()?;
    let norm = GradNorm::parse(&cfg.diagnostics.grad_norm).expect("validated");
    let mut inputs = BTreeMap::new();
    let v0 = initial_field(cfg, &mut inputs)?;
    let (sc, mut header) = solver_config(cfg, norm)?;
    let initial_hash = git_hash(format!("{}{:?}", echo(&cfg.initial), inputs.get("initial")).as_bytes());
    let manifest = Manifest::new("simulate", echo(cfg), inputs, None, Some(initial_hash));
    header.manifest = manifest.bytes();

    create_dir(out)?;
    let snap_dir = out.join(SNAPSHOT_DIR);
    create_dir(&snap_dir)?;
    super::clear_stale(&snap_dir, "snap_")?;
    manifest.write(out)?;

    let mut log = TrajectoryLog::new(LogMeta {
        stride: cfg.diagnostics.stride,
        manifest: Some(manifest.hash.clone()),
        ..LogMeta::physical(cfg.diagnostics.p_list.clone(), norm)
    });
    let v = leray_project(&dealias(&v0.as_spectral().map_err(numerical)?).map_err(numerical)?).map_err(numerical)?;
    let every = cfg.diagnostics.snapshot_every.map_or(u64::MAX, |k| k as u64);
    let mut writer = SnapshotWriter {
        every,
        dir: &snap_dir,
        header,
        written: Vec::new(),
    };
    writer.write(&SimState::new(v.clone()).map_err(numerical)?)?;
    info!("simulate: manifest {}", manifest.hash);
    let result = run(&v, &sc, &mut log, Some(&mut writer as &mut dyn StepObserver));

    let log_path = out.join(LOG_FILE);
    std::fs::write(&log_path, log.to_csv()).map_err(|e| CliError::io(&log_path, e))?;
    let outcome = match result {
        Ok(o) => o,
        Err(SolverError::InvalidConfig(m)) => return Err(cfg_err("solver", m)),
        Err(SolverError::NonFinite { time, step, last_good }) => {
            writer.write(&last_good)?;
            return Err(CliError::Numerical(format!("non-finite velocity at t = {time} (step {step})")));
        }
        Err(e) => return Err(numerical(e)),
    };
    writer.write(&outcome.state)?;
    let termination = match &outcome.termination {
        Termination::Completed => "completed".to_string(),
        Termination::ResolutionExhausted { time, tail_fraction } => {
            format!("resolution_exhausted at {time} (tail fraction {tail_fraction:e})")
        }
    };
    let summary = SimulateSummary {
        manifest: manifest.hash.clone(),
        termination: termination.clone(),
        t_final: outcome.state.time,
        steps: outcome.state.step_count,
        log_rows: log.len(),
        snapshots: writer.written.clone(),
    };
    write_json(&out.join("run.json"), &summary)?;
    if termination != "completed" {
        return Err(CliError::Numerical(termination));
    }
    Ok(summary)
}
