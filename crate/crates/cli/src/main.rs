use std::path::PathBuf;
use std::process::ExitCode;

use bulb_cli::commands::{self, ExclusionArgs};
use bulb_cli::config::{ExperimentConfig, MuFamily, MuSection, ProfileSection, TransformSection, VerifySection, WindowSection};
use bulb_cli::error::{CliError, EXIT_CHECK_FAILED, EXIT_PASS};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bulb", version, about = "Pseudospectral Euler/Navier-Stokes experiments in similarity variables")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Pass tolerance on relative margins.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for random initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Constant,
    PowerLaw,
    ExpGradient,
    ExpEnstrophy,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the configured flow and write its log and snapshots.
    Simulate,
    /// Push a run's snapshots into similarity variables.
    Transform {
        /// Run directory written by `simulate`.
        #[arg(long)]
        run: PathBuf,
        /// Similarity exponent α
        #[arg(long)]
        alpha: Option<f64>,
        /// Window half-width in the similarity variable.
        #[arg(long)]
        radius: Option<f64>,
        /// Window lattice points per axis.
        #[arg(long)]
        n: Option<usize>,
        /// Family of the scaling function μ
        #[arg(long, value_enum)]
        mu: Option<Family>,
        /// Value of a constant μ
        #[arg(long)]
        mu_value: Option<f64>,
        /// Blow-up time of the power-law μ
        #[arg(long)]
        t_blow: Option<f64>,
        /// Exponent γ of the μ family
        #[arg(long)]
        gamma: Option<f64>,
        /// Sign of the exp-gradient exponent, 1 or -1
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<i8>,
    },
    /// Check the a-priori vorticity estimates over run logs.
    Verify {
        /// One run, or a physical and a renormalized run of the same data.
        #[arg(long = "run", required = true, num_args = 1..=2)]
        runs: Vec<PathBuf>,
        /// Check ids to run (prefix `1.11` selects both halves).
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Vorticity exponents (`inf` for the sup norm).
        #[arg(long = "p", value_parser = parse_p)]
        p_list: Vec<f64>,
    },
    /// Convergence and stationarity tests for renormalized snapshots.
    Profile {
        /// Directory of renormalized snapshots (`ren_*.bulb` or `snap_*.bulb`)
        #[arg(long)]
        snapshots: PathBuf,
        /// Lebesgue exponent of the convergence test
        #[arg(long, value_parser = parse_p)]
        p: Option<f64>,
        /// 1.4, 2.18, 3.1a or weak-euler-limit.
        #[arg(long)]
        system: Option<String>,
        /// Fixed ball window radius.
        #[arg(long)]
        window_radius: Option<f64>,
    },
    /// Exclusion verdicts for asymptotically self-similar blow-up.
    Exclusion {
        /// Bound M on the rescaled vorticity
        #[arg(long)]
        m: f64,
        /// Similarity exponent α
        #[arg(long)]
        alpha: f64,
        /// Vorticity exponent (`inf` for the sup norm)
        #[arg(long, value_parser = parse_p, conflicts_with = "region")]
        p: Option<f64>,
        /// Print the excluded p-region instead of a single verdict.
        #[arg(long)]
        region: bool,
    },
}

fn parse_p(s: &str) -> Result<f64, String> {
    bulb_core::diagnostics::parse_p(s).ok_or_else(|| format!("not an exponent: {s}"))
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<PathBuf, CliError> {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set output_dir".into()))
}

fn load(cli: &Cli) -> Result<Option<ExperimentConfig>, CliError> {
    cli.config.as_deref().map(ExperimentConfig::load).transpose()
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = load(cli)?;
    match &cli.cmd {
        Cmd::Simulate => {
            let mut cfg = cfg.ok_or_else(|| CliError::Usage("simulate needs --config".into()))?;
            if let Some(s) = cli.seed {
                cfg.seed = Some(s);
                if let Some(bulb_cli::config::InitialCondition::RandomSolenoidal { seed, .. }) = &mut cfg.initial {
                    *seed = Some(s);
                }
            }
            let out = out_dir(cli, Some(&cfg))?;
            let s = commands::simulate(&cfg, &out)?;
            println!("{}: {} steps to t = {} ({})", out.display(), s.steps, s.t_final, s.termination);
            Ok(EXIT_PASS)
        }
        Cmd::Transform {
            run,
            alpha,
            radius,
            n,
            mu,
            mu_value,
            t_blow,
            gamma,
            sign,
        } => {
            let base = cfg.as_ref().and_then(|c| c.transform.clone());
            let missing = |f: &str| CliError::Usage(format!("transform needs --{f} or [transform].{f}"));
            let mut mu_sec = match (mu, base.as_ref()) {
                (Some(f), _) => MuSection {
                    family: match f {
                        Family::Constant => MuFamily::Constant,
                        Family::PowerLaw => MuFamily::PowerLaw,
                        Family::ExpGradient => MuFamily::ExpGradient,
                        Family::ExpEnstrophy => MuFamily::ExpEnstrophy,
                    },
                    value: None,
                    t_blow: None,
                    gamma: 1.0,
                    sign: 1,
                },
                (None, Some(b)) => b.mu.clone(),
                (None, None) => return Err(missing("mu")),
            };
            mu_sec.value = mu_value.or(mu_sec.value);
            mu_sec.t_blow = t_blow.or(mu_sec.t_blow);
            mu_sec.gamma = gamma.unwrap_or(mu_sec.gamma);
            mu_sec.sign = sign.unwrap_or(mu_sec.sign);
            let t = TransformSection {
                alpha: alpha.or(base.as_ref().map(|b| b.alpha)).ok_or_else(|| missing("alpha"))?,
                radius: radius.or(base.as_ref().map(|b| b.radius)).ok_or_else(|| missing("radius"))?,
                n: n.or(base.as_ref().map(|b| b.n)).ok_or_else(|| missing("n"))?,
                mu: mu_sec,
            };
            let probe = ExperimentConfig {
                transform: Some(t.clone()),
                ..ExperimentConfig::parse("").expect("empty config parses")
            };
            probe.validate()?;
            let out = out_dir(cli, cfg.as_ref())?;
            let s = commands::transform(run, &t, &out)?;
            println!("{}: {} renormalized snapshots ({})", out.display(), s.snapshots.len(), s.mu_family);
            Ok(EXIT_PASS)
        }
        Cmd::Verify { runs, checks, p_list } => {
            let mut v: VerifySection = cfg.as_ref().and_then(|c| c.verify.clone()).unwrap_or_default();
            if !checks.is_empty() {
                v.checks = Some(checks.clone());
            }
            if !p_list.is_empty() {
                v.p_list = Some(p_list.clone());
            }
            if let Some(t) = cli.tol {
                if !(t > 0.0) {
                    return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
                }
                v.tol = t;
            }
            let out = out_dir(cli, cfg.as_ref())?;
            let s = commands::verify(runs, &v, &out)?;
            for c in &s.checks {
                let tag = if c.tag.is_empty() { String::new() } else { format!(" [{}]", c.tag) };
                match c.worst_margin {
                    Some(m) => println!("{:<5} {}{tag}: worst margin {m:e}", c.status, c.id),
                    None => println!("{:<5} {}{tag}", c.status, c.id),
                }
            }
            for k in &s.skipped {
                println!("skip  {}: {}", k.check, k.reason);
            }
            println!("{} of {} checks failed (tol {:e})", s.failed, s.checks.len(), s.tol);
            Ok(if s.passed() { EXIT_PASS } else { EXIT_CHECK_FAILED })
        }
        Cmd::Profile {
            snapshots,
            p,
            system,
            window_radius,
        } => {
            let mut sec: ProfileSection = cfg.as_ref().and_then(|c| c.profile.clone()).unwrap_or_default();
            if let Some(p) = p {
                sec.p = *p;
            }
            if let Some(s) = system {
                sec.system = s.clone();
            }
            if let Some(r) = window_radius {
                sec.window = WindowSection::Fixed { radius: *r };
            }
            let dealias = cfg
                .as_ref()
                .and_then(|c| c.grid.as_ref())
                .map_or(2.0 / 3.0, |g| g.dealias_fraction);
            let probe = ExperimentConfig {
                profile: Some(sec.clone()),
                ..ExperimentConfig::parse("").expect("empty config parses")
            };
            probe.validate()?;
            let out = out_dir(cli, cfg.as_ref())?;
            let s = commands::profile(snapshots, &sec, dealias, &out)?;
            println!(
                "{}: {} ({} snapshots), max normalized residual {:e}",
                out.display(),
                s.verdict,
                s.snapshots,
                s.max_normalized_residual
            );
            for n in &s.notes {
                println!("note: {n}");
            }
            Ok(EXIT_PASS)
        }
        Cmd::Exclusion { m, alpha, p, region } => {
            if p.is_none() && !region {
                return Err(CliError::Usage("exclusion needs --p or --region".into()));
            }
            print!("{}", commands::exclusion(ExclusionArgs { m: *m, alpha: *alpha, p: *p })?);
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
