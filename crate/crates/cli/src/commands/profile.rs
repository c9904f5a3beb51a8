use std::collections::BTreeMap;
use std::path::Path;

use bulb_core::diagnostics::Frame;
use bulb_core::profile::{
    profile_convergence_test, profile_energy_identity, stationary_residual, test_family, ConvergenceReport,
    EnergyIdentity, ProfileCandidate, ProfileError, Provenance, ResidualReport, StationarySystem, WindowSchedule,
};
use bulb_core::spectral::{Field, GridSpec};
use serde::Serialize;

use super::{create_dir, echo, list_snapshots, write_json, SNAPSHOT_DIR};
use crate::config::{ProfileSection, WindowSection};
use crate::error::CliError;
use crate::manifest::{hash_hex, Manifest};
use crate::snapshot::{Snapshot, SnapshotMeta};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub manifest: String,
    pub source: String,
    pub snapshots: usize,
    pub verdict: String,
    pub zero_profile: bool,
    pub max_normalized_residual: f64,
    pub energy_rel_diff: Option<f64>,
    pub notes: Vec<String>,
}

fn numerical(e: ProfileError) -> CliError {
    match e {
        ProfileError::InvalidParameter(m) => CliError::Usage(m),
        ProfileError::LatticeMismatch(i) => CliError::Usage(format!("snapshot {i} is on a different lattice")),
        ProfileError::TooFewSnapshots(k) => CliError::Usage(format!("need at least 3 snapshots, got {k}")),
        e @ ProfileError::TestSupport { .. } => CliError::Usage(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

/// Re-expresses a periodic field on the centred lattice of the same box by a
/// whole-cell roll. Fields already centred pass through.
fn centred(f: Field) -> Result<Field, CliError> {
    let g = *f.grid();
    let target = -0.5 * g.domain_length;
    let h = g.spacing();
    let shift = (g.origin - target) / h;
    let k = shift.round();
    if (shift - k).abs() > 1e-9 {
        return Err(CliError::Usage(format!(
            "lattice origin {} is not a whole number of cells from the centred origin",
            g.origin
        )));
    }
    let n = g.n;
    let k = (k as i64).rem_euclid(n as i64) as usize;
    if k == 0 {
        return Ok(f);
    }
    // value at new index j is the old value at j − k (the new origin is k cells lower)
    let src = f.as_physical().map_err(|e| CliError::Numerical(e.to_string()))?;
    let data = src.physical().map_err(|e| CliError::Numerical(e.to_string()))?;
    let ng = GridSpec::centered(n, 0.5 * g.domain_length)
        .and_then(|x| x.with_dealias_fraction(g.dealias_fraction))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let back = |j: usize| (j + n - k) % n;
    let comps: [Vec<f64>; 3] = std::array::from_fn(|c| {
        let mut out = vec![0.0; g.len_physical()];
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    out[g.idx(x, y, z)] = data[c][g.idx(back(x), back(y), back(z))];
                }
            }
        }
        out
    });
    Field::from_physical(ng, comps).map_err(|e| CliError::Numerical(e.to_string()))
}

/// Convergence, stationary residual and energy identity for the renormalized
/// snapshots in `snap_dir`, or in its `snapshots/` subdirectory when
/// `snap_dir` is a run or transform directory.
pub fn profile(snap_dir: &Path, cfg: &ProfileSection, dealias_fraction: f64, out: &Path) -> Result<ProfileSummary, CliError> {
    let mut paths = list_snapshots(snap_dir)?;
    let nested = snap_dir.join(SNAPSHOT_DIR);
    if paths.is_empty() && nested.is_dir() {
        paths = list_snapshots(&nested)?;
    }
    let mut snaps: Vec<Snapshot> = paths
        .iter()
        .map(|p| Snapshot::read(p, dealias_fraction))
        .collect::<Result<_, _>>()?;
    if snaps.len() < 3 {
        return Err(CliError::Usage(format!(
            "{} holds {} snapshots; the convergence test needs at least 3",
            snap_dir.display(),
            snaps.len()
        )));
    }
    let source = snaps[0].meta.manifest;
    for (p, s) in paths.iter().zip(&snaps) {
        if s.meta.manifest != source {
            return Err(CliError::MixedManifest(format!(
                "{} carries {}, {} carries {}",
                p.display(),
                hash_hex(&s.meta.manifest),
                paths[0].display(),
                hash_hex(&source)
            )));
        }
        if s.meta.frame != Frame::Renormalized {
            return Err(CliError::Usage(format!("{} is not a renormalized snapshot", p.display())));
        }
    }
    snaps.sort_by(|a, b| a.meta.time.total_cmp(&b.meta.time));
    let alpha = snaps[0].meta.alpha;
    let system = StationarySystem::parse(&cfg.system).ok_or_else(|| CliError::Config {
        field: "profile.system".into(),
        message: format!("unknown system '{}'", cfg.system),
    })?;
    let schedule = match cfg.window {
        WindowSection::Whole => WindowSchedule::Whole,
        WindowSection::Fixed { radius } => WindowSchedule::Fixed { radius },
        WindowSection::PowerLaw { t_blow, gamma } => WindowSchedule::PowerLaw { t_blow, gamma, alpha },
    };
    let mut seq = Vec::with_capacity(snaps.len());
    for s in &snaps {
        seq.push((s.meta.time, centred(s.field.clone())?));
    }
    let conv = profile_convergence_test(&seq, cfg.p, &schedule).map_err(numerical)?;

    let last: &SnapshotMeta = &snaps[snaps.len() - 1].meta;
    let terminal = seq.pop().expect("at least 3").1;
    let mut cand = ProfileCandidate::new(terminal, alpha, Provenance::RunLimit).map_err(numerical)?;
    cand.p = Some(cfg.p);
    if last.mu_family == 2 {
        cand.gamma = Some(last.mu_params[0]);
    }
    let family = test_family(cand.radius(), cfg.test_seed.unwrap_or(0));
    let residual = stationary_residual(&cand, system, &family).map_err(numerical)?;
    let mut notes = Vec::new();
    let energy: Option<EnergyIdentity> = match profile_energy_identity(&cand, alpha) {
        Ok(e) => Some(e),
        Err(ProfileError::NotCompact(r)) => {
            notes.push(format!(
                "energy identity skipped: candidate is not compactly supported in its window (boundary/peak = {r:e})"
            ));
            None
        }
        Err(e) => return Err(numerical(e)),
    };
    if conv.zero_profile {
        notes.push("the sequence collapses to the zero profile".into());
    }

    let mut inputs = BTreeMap::new();
    inputs.insert("snapshots".into(), hash_hex(&source));
    let manifest = Manifest::new("profile", echo(cfg), inputs, Some(hash_hex(&source)), None);
    create_dir(out)?;
    manifest.write(out)?;
    #[derive(Serialize)]
    struct Doc<'r, T: Serialize> {
        manifest: &'r str,
        #[serde(flatten)]
        body: &'r T,
    }
    let h = manifest.hash.as_str();
    write_json(&out.join("convergence.json"), &Doc::<ConvergenceReport> { manifest: h, body: &conv })?;
    write_json(&out.join("residual.json"), &Doc::<ResidualReport> { manifest: h, body: &residual })?;
    #[derive(Serialize)]
    struct EnergyDoc<'r> {
        manifest: &'r str,
        identity: Option<&'r EnergyIdentity>,
        notes: &'r [String],
    }
    write_json(
        &out.join("energy.json"),
        &EnergyDoc {
            manifest: h,
            identity: energy.as_ref(),
            notes: &notes,
        },
    )?;
    let mut meta = last.clone();
    meta.manifest = manifest.bytes();
    meta.provenance = Provenance::RunLimit;
    Snapshot {
        meta,
        field: cand.field.clone(),
    }
    .write(&out.join("candidate.bulb"))?;

    let summary = ProfileSummary {
        manifest: manifest.hash.clone(),
        source: hash_hex(&source),
        snapshots: snaps.len(),
        verdict: serde_json::to_value(conv.verdict)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        zero_profile: conv.zero_profile,
        max_normalized_residual: residual.max_normalized,
        energy_rel_diff: energy.map(|e| e.rel_diff),
        notes,
    };
    write_json(&out.join("profile.json"), &summary)?;
    Ok(summary)
}
