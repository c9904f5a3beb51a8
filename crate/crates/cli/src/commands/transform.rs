use std::collections::BTreeMap;
use std::path::Path;

use bulb_core::diagnostics::Frame;
use bulb_core::similarity::{push_snapshot, MuSchedule, SimilarityError, SimilarityMap};
use serde::Serialize;

use super::{create_dir, echo, list_snapshots, read_log, write_json, SNAPSHOT_DIR};
use crate::config::{MuFamily, MuSection, TransformSection};
use crate::error::CliError;
use crate::manifest::{git_hash, hash_hex, Manifest};
use crate::snapshot::{read_meta, Snapshot, SnapshotMeta};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformSummary {
    pub manifest: String,
    pub source: String,
    pub mu_family: String,
    pub alpha: f64,
    pub radius: f64,
    pub n: usize,
    pub snapshots: Vec<String>,
}

fn schedule(mu: &MuSection, log: &bulb_core::diagnostics::TrajectoryLog) -> Result<MuSchedule, CliError> {
    let field = |f: &str, e: SimilarityError| CliError::Config {
        field: format!("transform.mu.{f}"),
        message: e.to_string(),
    };
    match mu.family {
        MuFamily::Constant => {
            let c = mu.value.ok_or_else(|| CliError::Config {
                field: "transform.mu.value".into(),
                message: "the constant family needs a value".into(),
            })?;
            MuSchedule::constant(c).map_err(|e| field("value", e))
        }
        MuFamily::PowerLaw => {
            let t = mu.t_blow.ok_or_else(|| CliError::Config {
                field: "transform.mu.t_blow".into(),
                message: "the power-law family needs t_blow".into(),
            })?;
            MuSchedule::power_law(t, mu.gamma).map_err(|e| field("gamma", e))
        }
        MuFamily::ExpGradient => MuSchedule::exp_gradient(log, mu.gamma, mu.sign).map_err(|e| field("gamma", e)),
        MuFamily::ExpEnstrophy => MuSchedule::exp_enstrophy(log, mu.gamma).map_err(|e| field("gamma", e)),
    }
}

/// Checks that every snapshot in `dir` carries `hash` and returns their paths.
pub(crate) fn manifest_snapshots(dir: &Path, hash: &str) -> Result<Vec<std::path::PathBuf>, CliError> {
    let snaps = list_snapshots(dir)?;
    for p in &snaps {
        let m = read_meta(p)?;
        let h = hash_hex(&m.manifest);
        if h != hash {
            return Err(CliError::MixedManifest(format!("{} carries {h}, run manifest is {hash}", p.display())));
        }
    }
    Ok(snaps)
}

/// Pushes every physical snapshot of the run in `run_dir` into the
/// renormalized frame on a centred window, writing `ren_*.bulb` and
/// `transform.csv` into `out`.
pub fn transform(run_dir: &Path, t: &TransformSection, out: &Path) -> Result<TransformSummary, CliError> {
    let run_manifest = Manifest::read(run_dir)?;
    let log = read_log(run_dir)?;
    if log.meta.manifest.as_deref() != Some(run_manifest.hash.as_str()) {
        return Err(CliError::MixedManifest(format!(
            "log carries {:?}, run manifest is {}",
            log.meta.manifest, run_manifest.hash
        )));
    }
    if log.meta.frame != Frame::Physical {
        return Err(CliError::Usage("transform needs a physical-frame run".into()));
    }
    let snaps = manifest_snapshots(&run_dir.join(SNAPSHOT_DIR), &run_manifest.hash)?;
    if snaps.is_empty() {
        return Err(CliError::Usage(format!("no snapshots under {}", run_dir.join(SNAPSHOT_DIR).display())));
    }
    let mu = schedule(&t.mu, &log)?;
    let (family, params) = mu.header();
    let label = mu.label().to_string();
    let map = SimilarityMap::new(mu, t.alpha).map_err(|e| CliError::Config {
        field: "transform.alpha".into(),
        message: e.to_string(),
    })?;

    let mut inputs = BTreeMap::new();
    inputs.insert("log".into(), git_hash(log.to_csv().as_bytes()));
    let manifest = Manifest::new(
        "transform",
        echo(t),
        inputs,
        Some(run_manifest.hash.clone()),
        run_manifest.initial.clone(),
    );
    let dealias = log.meta.dealias_fraction;
    let mut csv = String::from("index,s,t,log_mu,dilation,velocity_factor,max_radius,source\n");
    let mut pushed = Vec::new();
    for (i, p) in snaps.iter().enumerate() {
        let snap = Snapshot::read(p, dealias)?;
        if snap.meta.frame != Frame::Physical {
            continue;
        }
        let tt = snap.meta.time;
        let w = push_snapshot(&snap.field, &map, tt, t.radius, t.n).map_err(|e| match e {
            SimilarityError::WindowTooLarge {
                requested,
                max_admissible,
            } => CliError::Usage(format!(
                "transform.radius {requested} exceeds the admissible {max_admissible} at t = {tt}"
            )),
            other => CliError::Numerical(other.to_string()),
        })?;
        let num = |r: Result<f64, SimilarityError>| r.map_err(|e| CliError::Numerical(e.to_string()));
        let s = num(map.s_of_t(tt))?;
        let log_mu = num(map.log_mu(tt))?;
        let meta = SnapshotMeta {
            time: s,
            viscosity: snap.meta.viscosity,
            frame: Frame::Renormalized,
            alpha: t.alpha,
            mu_family: family,
            mu_params: params,
            phys_time: tt,
            log_mu,
            provenance: bulb_core::profile::Provenance::RunLimit,
            manifest: manifest.bytes(),
        };
        let name = format!("ren_{i:06}.bulb");
        csv.push_str(&format!(
            "{i},{s:e},{tt:e},{log_mu:e},{:e},{:e},{:e},{}\n",
            num(map.dilation(tt))?,
            num(map.velocity_factor(tt))?,
            num(map.max_window_radius(tt, snap.field.grid().domain_length))?,
            p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
        ));
        pushed.push((name, Snapshot { meta, field: w }));
    }
    // nothing is written until every snapshot has been pushed, so a window
    // violation leaves the output directory untouched
    create_dir(&out.join(SNAPSHOT_DIR))?;
    super::clear_stale(&out.join(SNAPSHOT_DIR), "ren_")?;
    manifest.write(out)?;
    let mut written = Vec::new();
    for (name, snap) in pushed {
        snap.write(&out.join(SNAPSHOT_DIR).join(&name))?;
        written.push(name);
    }
    let path = out.join("transform.csv");
    std::fs::write(&path, csv).map_err(|e| CliError::io(&path, e))?;
    let summary = TransformSummary {
        manifest: manifest.hash.clone(),
        source: run_manifest.hash,
        mu_family: label,
        alpha: t.alpha,
        radius: t.radius,
        n: t.n,
        snapshots: written,
    };
    write_json(&out.join("transform.json"), &summary)?;
    Ok(summary)
}
