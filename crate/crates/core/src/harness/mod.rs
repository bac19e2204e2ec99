//! Experiment orchestration: configs, studies, reports and plot files.
//!
//! Every study returns a [`Study`] held in memory; [`write_study`] then
//! writes its data files, `report.json`, `summary.txt` and the figures. The
//! figures' SVG and CSV are rendered from the same report, so they always
//! agree.

mod config;
mod report;
mod studies;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{ConfigError, CoupleSection, ExperimentConfig, KindName, ModelSection, PdeSection, RunSection};
pub use report::{Check, Figure, Report, Series};
pub use studies::{
    beta_check, certification_tests, converge_study, couple_check, ledger_violations, pde_study, simulate_study,
    ConvergeRow, Study, BETA_TOLERANCE, CERTIFICATION_HORIZON, CONSERVATION_TOLERANCE, FRONT_TOLERANCE, L1_TOLERANCE,
    RESIDUAL_RATIO, SCALING_TOLERANCE,
};

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Runtime(crate::Error),
    Io { path: PathBuf, message: String },
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::Runtime(e) => write!(f, "runtime error: {e}"),
            HarnessError::Io { path, message } => write!(f, "I/O error at {}: {message}", path.display()),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<crate::Error> for HarnessError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Parameter { field, reason } => HarnessError::Config(ConfigError::new(field, reason)),
            crate::Error::Profile(m) => HarnessError::Config(ConfigError::new("profile", m)),
            e => HarnessError::Runtime(e),
        }
    }
}

impl HarnessError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Pde,
    Converge,
    BetaCheck,
    CoupleCheck,
}

pub fn run_study(cmd: Command, cfg: &ExperimentConfig) -> Result<Study, HarnessError> {
    match cmd {
        Command::Simulate => simulate_study(cfg),
        Command::Pde => pde_study(cfg),
        Command::Converge => converge_study(cfg),
        Command::BetaCheck => beta_check(cfg),
        Command::CoupleCheck => couple_check(cfg),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io { path: path.to_path_buf(), message: e.to_string() };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

/// Writes `<name>.svg` and `<name>.csv` per figure. A report without
/// figures writes nothing.
pub fn emit_plots(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    for f in &report.figures {
        let svg = dir.join(format!("{}.svg", f.name));
        write(&svg, &f.to_svg())?;
        let csv = dir.join(format!("{}.csv", f.name));
        write(&csv, &f.to_csv())?;
        out.push(svg);
        out.push(csv);
    }
    Ok(out)
}

/// Writes every artifact of a study below `dir` and returns the paths.
pub fn write_study(study: &Study, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    for (name, contents) in &study.files {
        let p = dir.join(name);
        write(&p, contents)?;
        out.push(p);
    }
    let json = serde_json::to_string_pretty(&study.report).expect("report serialises");
    let p = dir.join("report.json");
    write(&p, &json)?;
    out.push(p);
    let p = dir.join("summary.txt");
    write(&p, &study.report.summary())?;
    out.push(p);
    out.extend(emit_plots(&study.report, &dir.join("plots"))?);
    Ok(out)
}

/// Re-renders the plots of a `report.json` found in `dir`.
pub fn plot_from_dir(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let p = dir.join("report.json");
    let text = fs::read_to_string(&p).map_err(|e| HarnessError::Io { path: p.clone(), message: e.to_string() })?;
    let report: Report =
        serde_json::from_str(&text).map_err(|e| HarnessError::Io { path: p.clone(), message: format!("bad report: {e}") })?;
    emit_plots(&report, &dir.join("plots"))
}
