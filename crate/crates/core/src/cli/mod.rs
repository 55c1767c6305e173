//! Command-line front end: config files in, artifact directories out.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 hypothesis violation,
//! 3 bound-check failure, 4 numeric blow-up.

pub mod artifacts;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::analysis::{
    analyze, lemma3_factor, noncollision_threshold, AnalysisOptions, AnalysisReport,
};
use crate::error::PlatoonError;
use crate::profile::VelocityProfile;
use crate::sim::{self, Scenario};

pub use artifacts::{default_plot_vehicles, write_artifacts, PlotFiles, RunArtifacts};
pub use config::{parse_scenario, serialize_scenario, ConfigDoc, ConfigError, ConfigErrorKind};

pub const OUT_ENV: &str = "PLATOON_OUT";
pub const DEFAULT_OUT: &str = "platoon-out";

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const HYPOTHESIS: i32 = 2;
    pub const BOUND_CHECK: i32 = 3;
    pub const BLOW_UP: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", .path.display())]
    Config { path: PathBuf, source: ConfigError },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Platoon(#[from] PlatoonError),

    #[error("{failed} bound check(s) failed; see {}", .report.display())]
    BoundCheck { failed: usize, report: PathBuf },

    #[error("{failed} of {total} sweep runs failed")]
    Sweep {
        failed: usize,
        total: usize,
        code: i32,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => exit::USAGE,
            CliError::Config { source, .. } => match source.kind {
                ConfigErrorKind::Hypothesis(_) => exit::HYPOTHESIS,
                _ => exit::USAGE,
            },
            CliError::Platoon(e) => match e {
                PlatoonError::Hypothesis(_) => exit::HYPOTHESIS,
                PlatoonError::NumericBlowUp { .. } => exit::BLOW_UP,
                _ => exit::USAGE,
            },
            CliError::BoundCheck { .. } => exit::BOUND_CHECK,
            CliError::Sweep { code, .. } => *code,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "platoon",
    version,
    about = "Switched constant-time-headway platoon lab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct OutputArgs {
    /// Output base directory; overrides PLATOON_OUT.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Vehicles that get plot-data CSVs (default: 10 evenly spaced).
    #[arg(long, value_delimiter = ',')]
    pub plot_vehicles: Option<Vec<usize>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate and write artifacts.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate, run every check, exit 3 on any violation.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// One run per value of a `section.key` parameter, in parallel.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the non-collision threshold and profile constants.
    Threshold { config: PathBuf },
}

/// Output base: `--out`, else `$PLATOON_OUT`, else `platoon-out`.
pub fn output_base(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| {
            std::env::var_os(OUT_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn config_stem(path: &Path) -> String {
    path.file_stem()
        .map_or("scenario".into(), |s| s.to_string_lossy().into_owned())
}

fn read_doc(path: &Path) -> Result<ConfigDoc, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    ConfigDoc::parse(&text).map_err(|source| CliError::Config {
        path: path.into(),
        source,
    })
}

fn resolve(doc: &ConfigDoc, path: &Path) -> Result<Scenario, CliError> {
    doc.resolve().map_err(|source| CliError::Config {
        path: path.into(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub artifacts: RunArtifacts,
    pub report: AnalysisReport,
}

/// Simulates `scenario`, analyzes it and writes artifacts to `dir`.
pub fn execute(
    scenario: &Scenario,
    dir: &Path,
    plot_vehicles: Option<&[usize]>,
) -> Result<RunOutput, CliError> {
    let text = serialize_scenario(scenario)?;
    let trajectory = sim::run(scenario)?;
    let report = analyze(scenario, &trajectory, AnalysisOptions::default())?;
    let vehicles = match plot_vehicles {
        Some(v) => {
            if let Some(&bad) = v.iter().find(|&&i| i == 0 || i > scenario.n) {
                return Err(CliError::Usage(format!(
                    "plot vehicle {bad} outside 1..={}",
                    scenario.n
                )));
            }
            v.to_vec()
        }
        None => default_plot_vehicles(scenario.n),
    };
    let artifacts = write_artifacts(dir, &text, scenario, &trajectory, &report, &vehicles)
        .map_err(|source| CliError::Io {
            path: dir.into(),
            source,
        })?;
    Ok(RunOutput { artifacts, report })
}

fn cmd_run(
    config: &Path,
    output: &OutputArgs,
    verify: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let scenario = resolve(&read_doc(config)?, config)?;
    let dir = output_base(output.out.as_deref()).join(config_stem(config));
    let res = execute(&scenario, &dir, output.plot_vehicles.as_deref())?;
    let _ = writeln!(out, "artifacts: {}", res.artifacts.dir.display());
    let _ = writeln!(out, "collisions: {}", res.report.collisions);
    if verify {
        let _ = write!(out, "{}", res.report.to_text());
        let failed =
            res.report.failed_checks().count() + usize::from(res.report.collision_violation());
        if failed > 0 {
            return Err(CliError::BoundCheck {
                failed,
                report: res.artifacts.report,
            });
        }
    } else {
        let _ = writeln!(
            out,
            "verdict: {}",
            if res.report.all_pass() {
                "pass"
            } else {
                "fail"
            }
        );
    }
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    param: &str,
    values: &[String],
    output: &OutputArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let base_doc = read_doc(config)?;
    let scenarios: Vec<Scenario> = values
        .iter()
        .map(|v| {
            let mut doc = base_doc.clone();
            doc.set(param, v).map_err(|source| CliError::Config {
                path: config.into(),
                source,
            })?;
            resolve(&doc, config)
        })
        .collect::<Result<_, _>>()?;
    let root = output_base(output.out.as_deref())
        .join(config_stem(config))
        .join("sweep");
    let plot = output.plot_vehicles.as_deref();
    let results: Vec<Result<RunOutput, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .zip(values)
            .map(|(s, v)| {
                let dir = root.join(format!("{param}={v}"));
                scope.spawn(move || execute(s, &dir, plot))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut failed = 0;
    let mut code = exit::OK;
    for (v, r) in values.iter().zip(&results) {
        match r {
            Ok(o) => {
                let verdict = if o.report.all_pass() { "pass" } else { "fail" };
                let _ = writeln!(
                    out,
                    "{param}={v}: {verdict} collisions {} artifacts {}",
                    o.report.collisions,
                    o.artifacts.dir.display()
                );
            }
            Err(e) => {
                failed += 1;
                code = code.max(e.exit_code());
                let _ = writeln!(out, "{param}={v}: error: {e}");
            }
        }
    }
    if failed > 0 {
        return Err(CliError::Sweep {
            failed,
            total: values.len(),
            code,
        });
    }
    Ok(())
}

fn cmd_threshold(config: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = resolve(&read_doc(config)?, config)?;
    let t = scenario.headway();
    let c = scenario.profile.validate(t)?;
    let _ = writeln!(out, "headway: {t}");
    let _ = writeln!(out, "lipschitz: {}", c.lipschitz);
    let _ = writeln!(out, "infimum: {}", c.infimum);
    let _ = writeln!(out, "supremum: {}", c.supremum);
    let _ = writeln!(out, "contraction: {}", c.contraction());
    let _ = writeln!(out, "lemma3_factor: {}", lemma3_factor(t, c.lipschitz));
    let _ = writeln!(
        out,
        "noncollision_threshold: {} m",
        noncollision_threshold(&scenario.profile, t)
    );
    Ok(())
}

pub fn dispatch(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run { config, output } => cmd_run(config, output, false, out),
        Command::Verify { config, output } => cmd_run(config, output, true, out),
        Command::Sweep {
            config,
            param,
            values,
            output,
        } => cmd_sweep(config, param, values, output, out),
        Command::Threshold { config } => cmd_threshold(config, out),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
