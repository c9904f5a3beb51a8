use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bulb_core::diagnostics::{estimate_blowup, p_label, BlowupFitConfig, DiagnosticsError, Frame, TrajectoryLog};
use bulb_core::similarity::{bkm_invariant_check, BkmInvariantReport};
use bulb_core::verify::{
    premise_m0, verify_enstrophy_estimate, verify_gamma_family, verify_lp_power_sandwich, verify_lp_sandwich,
    verify_ratio_lower_bound, verify_renorm_field_decay, verify_sup_vorticity_growth, EstimateReport, VerifyError,
    DEFAULT_C0,
};
use serde::Serialize;

use super::{create_dir, echo, read_log, write_json, SNAPSHOT_DIR};
use crate::config::VerifySection;
use crate::error::CliError;
use crate::manifest::{hash_hex, Manifest};
use crate::snapshot::read_meta;

/// Every check id the runner knows, for selector validation.
pub const CHECK_IDS: [&str; 15] = [
    "1.7", "1.11-lower", "1.11-upper", "1.12", "2.7", "2.8", "2.8a", "2.9", "2.10", "2.11", "3.8", "3.2", "3.2a",
    "2.21", "bkm",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub id: String,
    pub tag: String,
    pub status: String,
    pub worst_margin: Option<f64>,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub check: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub manifest: String,
    pub sources: Vec<String>,
    pub tol: f64,
    pub checks: Vec<CheckEntry>,
    pub skipped: Vec<Skipped>,
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bkm: Option<BkmInvariantReport>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

/// Whether selector `sel` picks report `id`: exact match, a `sel-` prefix
/// (`1.11` picks both halves) or the lettered companion (`2.8` picks `2.8a`).
pub fn selects(sel: &str, id: &str) -> bool {
    id == sel || id.strip_prefix(sel).is_some_and(|r| r.starts_with('-') || r == "a")
}

struct RunInput {
    dir: PathBuf,
    manifest: Manifest,
    log: TrajectoryLog,
}

fn load_run(dir: &Path) -> Result<RunInput, CliError> {
    let manifest = Manifest::read(dir)?;
    let log = read_log(dir)?;
    let lh = log.meta.manifest.clone().unwrap_or_default();
    if lh != manifest.hash {
        return Err(CliError::MixedManifest(format!(
            "{}: log carries '{lh}', manifest.json is {}",
            dir.display(),
            manifest.hash
        )));
    }
    let snap_dir = dir.join(SNAPSHOT_DIR);
    if snap_dir.is_dir() {
        for p in super::list_snapshots(&snap_dir)? {
            let h = hash_hex(&read_meta(&p)?.manifest);
            if h != manifest.hash {
                return Err(CliError::MixedManifest(format!(
                    "{} carries {h}, manifest.json is {}",
                    p.display(),
                    manifest.hash
                )));
            }
        }
    }
    Ok(RunInput {
        dir: dir.to_path_buf(),
        manifest,
        log,
    })
}

struct Collector<'a> {
    out: PathBuf,
    tol: f64,
    selection: Option<&'a [String]>,
    manifest: String,
    entries: Vec<CheckEntry>,
    skipped: Vec<Skipped>,
}

impl Collector<'_> {
    fn wanted(&self, id: &str) -> bool {
        self.selection.map_or(true, |s| s.iter().any(|sel| selects(sel, id)))
    }

    /// True when any report of the group could be selected.
    fn any(&self, ids: &[&str]) -> bool {
        ids.iter().any(|id| self.wanted(id))
    }

    fn add(&mut self, rep: EstimateReport, tag: &str) -> Result<(), CliError> {
        if !self.wanted(&rep.id) {
            return Ok(());
        }
        let rep = rep.with_tol(self.tol);
        let stem = if tag.is_empty() { rep.id.clone() } else { format!("{}_{tag}", rep.id) };
        let file = format!("reports/{stem}.json");
        #[derive(Serialize)]
        struct Doc<'r> {
            manifest: &'r str,
            #[serde(flatten)]
            report: &'r EstimateReport,
            margins_file: String,
        }
        write_json(
            &self.out.join(&file),
            &Doc {
                manifest: &self.manifest,
                report: &rep,
                margins_file: format!("{stem}_margins.csv"),
            },
        )?;
        let csv = self.out.join(format!("reports/{stem}_margins.csv"));
        std::fs::write(&csv, rep.margins_csv()).map_err(|e| CliError::io(&csv, e))?;
        self.entries.push(CheckEntry {
            id: rep.id.clone(),
            tag: tag.to_string(),
            status: format!("{:?}", rep.status).to_lowercase(),
            worst_margin: rep.worst_margin,
            file,
        });
        Ok(())
    }

    fn add_all<I: IntoIterator<Item = EstimateReport>>(&mut self, reps: I, tag: &str) -> Result<(), CliError> {
        reps.into_iter().try_for_each(|r| self.add(r, tag))
    }

    /// Routes a verifier error: inapplicable logs are skipped with the reason,
    /// missing columns and bad parameters abort.
    fn handle<T>(&mut self, check: &str, r: Result<T, VerifyError>) -> Result<Option<T>, CliError> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(VerifyError::WrongLog(m) | VerifyError::Unpaired(m)) => {
                self.skipped.push(Skipped {
                    check: check.into(),
                    reason: m,
                });
                Ok(None)
            }
            Err(VerifyError::Diagnostics(DiagnosticsError::MissingColumn(c))) => Err(CliError::MissingColumns(c)),
            Err(VerifyError::InvalidParameter(m)) => Err(CliError::Usage(format!("{check}: {m}"))),
            Err(e) => Err(CliError::Numerical(format!("{check}: {e}"))),
        }
    }
}

fn p_tag(p: f64) -> String {
    format!("p{}", p_label(p))
}

/// Exponents to check on `log`, with every missing column reported at once.
fn exponents(log: &TrajectoryLog, requested: Option<&[f64]>) -> Result<Vec<f64>, CliError> {
    let mut ps: Vec<f64> = match requested {
        Some(r) => r.to_vec(),
        None => log.meta.p_list.clone(),
    };
    if !ps.iter().any(|p| p.is_infinite()) {
        ps.push(f64::INFINITY);
    }
    let missing: Vec<String> = ps
        .iter()
        .filter(|p| log.omega_lp(**p).is_err())
        .map(|p| format!("omega_lp_{}", p_label(*p)))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::MissingColumns(missing.join(", ")));
    }
    Ok(ps)
}

fn physical_checks(c: &mut Collector<'_>, log: &TrajectoryLog, v: &VerifySection) -> Result<(), CliError> {
    let ps = exponents(log, v.p_list.as_deref())?;
    let t_last = log.times().last().copied().unwrap_or(0.0);
    let t_blow = v.t_blow.unwrap_or(2.0 * t_last.max(v.t0).max(f64::MIN_POSITIVE));
    if c.any(&["1.11-lower", "1.11-upper"]) {
        for &p in &ps {
            if let Some(r) = c.handle("1.11", verify_lp_sandwich(log, p, v.t0))? {
                c.add_all(r, &p_tag(p))?;
            }
        }
    }
    if c.any(&["1.12"]) {
        for &p in &ps {
            for &a in &v.alphas {
                if let Some(r) = c.handle("1.12", verify_lp_power_sandwich(log, p, a, v.t0, t_blow, v.m0))? {
                    c.add(r, &format!("{}_a{a}", p_tag(p)))?;
                }
            }
        }
    }
    if c.any(&["1.7"]) {
        let m0 = match v.m0 {
            Some(m) => m,
            None => c.handle("1.7", premise_m0(log, v.t0, t_blow))?.unwrap_or(0.0),
        };
        if let Some(r) = c.handle("1.7", verify_sup_vorticity_growth(log, v.t0, t_blow, m0))? {
            c.add(r, "")?;
        }
    }
    if c.any(&["2.7", "2.8", "2.8a", "2.9"]) {
        for &g in &v.gammas {
            if let Some(r) = c.handle("2.7", verify_gamma_family(log, g))? {
                c.add_all(r, &format!("g{g}"))?;
            }
        }
    }
    if c.any(&["3.2", "3.2a"]) {
        let nu = log.meta.viscosity;
        if nu > 0.0 {
            let c0 = v.c0.unwrap_or(DEFAULT_C0);
            let gamma = c0 / nu.powi(3) + 1.0;
            if let Some(r) = c.handle("3.2", verify_enstrophy_estimate(log, gamma, c0))? {
                c.add_all(r, "")?;
            }
        } else {
            c.skipped.push(Skipped {
                check: "3.2".into(),
                reason: "inviscid run; the enstrophy estimate needs ν > 0".into(),
            });
        }
    }
    Ok(())
}

fn renormalized_checks(c: &mut Collector<'_>, log: &TrajectoryLog, v: &VerifySection) -> Result<(), CliError> {
    if c.any(&["2.10", "2.11", "3.8"]) {
        if let Some(r) = c.handle("2.10", verify_renorm_field_decay(log, v.c0.unwrap_or(DEFAULT_C0)))? {
            c.add(r, "")?;
        }
    }
    Ok(())
}

/// Runs every applicable, selected check over one run directory, or over a
/// physical and a renormalized run of the same initial data.
pub fn verify(dirs: &[PathBuf], v: &VerifySection, out: &Path) -> Result<VerifySummary, CliError> {
    if dirs.is_empty() || dirs.len() > 2 {
        return Err(CliError::Usage("verify takes one run directory or a physical/renormalized pair".into()));
    }
    if let Some(sel) = &v.checks {
        for s in sel {
            if !CHECK_IDS.iter().any(|id| selects(s, id)) {
                return Err(CliError::Config {
                    field: "verify.checks".into(),
                    message: format!("unknown check '{s}'"),
                });
            }
        }
    }
    let runs: Vec<RunInput> = dirs.iter().map(|d| load_run(d)).collect::<Result<_, _>>()?;
    if let [a, b] = &runs[..] {
        if a.manifest.initial.is_none() || a.manifest.initial != b.manifest.initial {
            return Err(CliError::MixedManifest(format!(
                "{} and {} do not start from the same initial data",
                a.dir.display(),
                b.dir.display()
            )));
        }
    }
    let sources: Vec<String> = runs.iter().map(|r| r.manifest.hash.clone()).collect();
    let mut inputs = BTreeMap::new();
    for (i, h) in sources.iter().enumerate() {
        inputs.insert(format!("run{i}"), h.clone());
    }
    let manifest = Manifest::new("verify", echo(v), inputs, sources.first().cloned(), runs[0].manifest.initial.clone());
    create_dir(&out.join("reports"))?;
    manifest.write(out)?;

    let mut c = Collector {
        out: out.to_path_buf(),
        tol: v.tol,
        selection: v.checks.as_deref(),
        manifest: manifest.hash.clone(),
        entries: Vec::new(),
        skipped: Vec::new(),
    };
    for r in &runs {
        match r.log.meta.frame {
            Frame::Physical => physical_checks(&mut c, &r.log, v)?,
            Frame::Renormalized => renormalized_checks(&mut c, &r.log, v)?,
        }
    }
    let phys = runs.iter().find(|r| r.log.meta.frame == Frame::Physical);
    let ren = runs.iter().find(|r| r.log.meta.frame == Frame::Renormalized);
    let mut bkm = None;
    if let (Some(p), Some(r)) = (phys, ren) {
        if c.any(&["2.21"]) {
            for q in exponents(&r.log, v.p_list.as_deref())? {
                if let Some(rep) = c.handle("2.21", verify_ratio_lower_bound(&p.log, &r.log, q))? {
                    c.add(rep, &p_tag(q))?;
                }
            }
        }
        if c.wanted("bkm") {
            let rep = bkm_invariant_check(&p.log, &r.log).map_err(|e| CliError::Numerical(e.to_string()))?;
            let status = if rep.rel_diff <= v.tol { "pass" } else { "fail" };
            #[derive(Serialize)]
            struct Doc<'r> {
                manifest: &'r str,
                status: &'r str,
                tol: f64,
                #[serde(flatten)]
                report: &'r BkmInvariantReport,
            }
            let file = "reports/bkm.json".to_string();
            write_json(
                &out.join(&file),
                &Doc {
                    manifest: &manifest.hash,
                    status,
                    tol: v.tol,
                    report: &rep,
                },
            )?;
            c.entries.push(CheckEntry {
                id: "bkm".into(),
                tag: String::new(),
                status: status.into(),
                worst_margin: Some(v.tol - rep.rel_diff),
                file,
            });
            bkm = Some(rep);
        }
    }
    if let Some(p) = phys {
        if let Ok(a) = estimate_blowup(&p.log, &BlowupFitConfig::default()) {
            #[derive(Serialize)]
            struct Doc<'r> {
                manifest: &'r str,
                #[serde(flatten)]
                assessment: &'r bulb_core::diagnostics::BlowupAssessment,
            }
            write_json(
                &out.join("blowup.json"),
                &Doc {
                    manifest: &manifest.hash,
                    assessment: &a,
                },
            )?;
        }
    }
    let failed = c.entries.iter().filter(|e| e.status == "fail").count();
    let summary = VerifySummary {
        manifest: manifest.hash,
        sources,
        tol: v.tol,
        checks: c.entries,
        skipped: c.skipped,
        failed,
        bkm,
    };
    write_json(&out.join("verify_summary.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors() {
        assert!(selects("1.11", "1.11-lower"));
        assert!(selects("2.8", "2.8a"));
        assert!(selects("2.8", "2.8"));
        assert!(!selects("2.1", "2.10"));
        assert!(!selects("3.2", "3.8"));
        assert!(selects("3.2a", "3.2a"));
    }
}
