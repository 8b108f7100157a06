//! Command-line front end for the `barankin` library: TOML configuration in,
//! JSON report (and optional trajectory CSV) out.

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use barankin::Model;
use thiserror::Error;

pub use commands::{execute, output_dir, report_path, Command, Outcome};
pub use config::RunConfig;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BARANKIN_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] barankin::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for bad input, 3 for a violated integrability postulate, 4 for rank
    /// deficiency, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use barankin::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Io(_) => 1,
            Self::Core(e) => match e {
                E::InvalidInput(_)
                | E::DimensionMismatch { .. }
                | E::Domain { .. }
                | E::Mode(_)
                | E::Support { .. } => 2,
                E::PostulateViolation { .. } => 3,
                E::RankDeficient { .. } => 4,
                E::Diagnostics(_) => 1,
            },
        }
    }
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.mc.seed = s;
        }
        if let Some(n) = self.samples {
            cfg.mc.samples = n;
        }
        if let Some(t) = self.tol {
            cfg.tolerance.psd_eps = t;
        }
    }
}

/// Loads `config`, runs `cmd` and writes the report. Returns the report path.
pub fn run(cmd: Command, config: &Path, out: Option<&Path>, ov: &Overrides) -> Result<(PathBuf, Outcome), CliError> {
    let mut cfg = RunConfig::load(config)?;
    ov.apply(&mut cfg);
    let base = config.parent().unwrap_or(Path::new("."));
    let outcome = execute(cmd, &cfg, base)?;
    let path = report_path(cmd, &cfg, out);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(&path, outcome.report.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if let (Some(r), true) = (&outcome.search, cfg.output.trajectory_csv) {
        let dim = cfg.build_model()?.theta_true().dim();
        commands::write_trajectory(&path.with_extension("trajectory.csv"), r, dim)?;
    }
    Ok((path, outcome))
}
