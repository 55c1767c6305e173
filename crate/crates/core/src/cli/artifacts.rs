//! On-disk outputs of a run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::AnalysisReport;
use crate::sim::{Scenario, Trajectory};

pub const SCENARIO_FILE: &str = "scenario.cfg";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const CHECKS_FILE: &str = "checks.csv";
pub const TRAJECTORY_HEADER: &str = "t,vehicle,x,v,u,branch,eps1,eps2,headway";

/// Target spacing of plot rows along the time axis, in seconds.
const PLOT_SPACING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub vehicle: usize,
    /// `x,v` rows.
    pub velocity: PathBuf,
    /// `x,headway` rows; empty body for the leader.
    pub headway: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    /// Resolved configuration; re-running it reproduces the trajectory.
    pub scenario: PathBuf,
    pub trajectory: PathBuf,
    pub report: PathBuf,
    pub checks: PathBuf,
    pub plots: Vec<PlotFiles>,
}

/// Vehicles `round(j n / 10)` for `j = 1..=10`, deduplicated; for `n = 100`
/// that is 10, 20, ..., 100.
pub fn default_plot_vehicles(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=10)
        .map(|j| ((j * n) as f64 / 10.0).round() as usize)
        .filter(|&i| i >= 1)
        .collect();
    v.dedup();
    v
}

/// Writes the full artifact set into `dir`, creating it if needed.
pub fn write_artifacts(
    dir: &Path,
    scenario_text: &str,
    scenario: &Scenario,
    trajectory: &Trajectory,
    report: &AnalysisReport,
    plot_vehicles: &[usize],
) -> std::io::Result<RunArtifacts> {
    fs::create_dir_all(dir)?;
    let art = RunArtifacts {
        dir: dir.to_path_buf(),
        scenario: dir.join(SCENARIO_FILE),
        trajectory: dir.join(TRAJECTORY_FILE),
        report: dir.join(REPORT_FILE),
        checks: dir.join(CHECKS_FILE),
        plots: plot_vehicles
            .iter()
            .map(|&i| PlotFiles {
                vehicle: i,
                velocity: dir.join(format!("plot_velocity_{i:03}.csv")),
                headway: dir.join(format!("plot_headway_{i:03}.csv")),
            })
            .collect(),
    };
    fs::write(&art.scenario, scenario_text)?;
    write_trajectory(&art.trajectory, trajectory)?;
    fs::write(&art.report, report.to_text())?;
    fs::write(&art.checks, report.checks_csv())?;

    let stride = ((PLOT_SPACING / scenario.record_interval).round() as usize).max(1);
    let last = trajectory.samples.len() - 1;
    let rows = || (0..=last).filter(move |k| k % stride == 0 || *k == last);
    for p in &art.plots {
        let k = p.vehicle - 1;
        let mut w = BufWriter::new(File::create(&p.velocity)?);
        writeln!(w, "x,v")?;
        for s in rows().map(|r| &trajectory.samples[r]) {
            writeln!(w, "{},{}", s.state.x[k], s.state.y[k])?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(&p.headway)?);
        writeln!(w, "x,headway")?;
        for s in rows().map(|r| &trajectory.samples[r]) {
            if let Some(h) = s.headways[k] {
                writeln!(w, "{},{}", s.state.x[k], h)?;
            }
        }
        w.flush()?;
    }
    Ok(art)
}

fn write_trajectory(path: &Path, trajectory: &Trajectory) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in &trajectory.samples {
        let t = s.t();
        for (k, d) in s.decisions.iter().enumerate() {
            let headway = s.headways[k].map_or(String::new(), |h| h.to_string());
            writeln!(
                w,
                "{t},{},{},{},{},{},{},{},{headway}",
                k + 1,
                s.state.x[k],
                s.state.y[k],
                d.u,
                d.branch.number(),
                d.eps.eps1,
                d.eps.eps2,
            )?;
        }
    }
    w.flush()
}
