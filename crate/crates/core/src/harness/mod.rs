//! Instance generation, serialization and experiment orchestration.

mod generate;
mod instance;
mod report;
mod run;

pub use generate::{generate_instance, random_circuit, GenParams, Kind, KINDS};
pub use instance::{Instance, InstanceFile};
pub use report::{emit_tables, Check, Quantity, Relation, Report};
pub use run::{run_batch, run_experiment, run_instance};

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Qma,
    Qam,
    Qmam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Enumerate,
    Sample,
    Analytic,
}

macro_rules! names {
    ($t:ty, $what:literal, $($v:ident => $s:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(Self::$v),)+
                    _ => Err(Error::Config(format!(concat!("unknown ", $what, " `{}`"), s))),
                }
            }
        }
    };
}

names!(Protocol, "protocol", Qma => "qma", Qam => "qam", Qmam => "qmam");
names!(Mode, "mode", Enumerate => "enumerate", Sample => "sample", Analytic => "analytic");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Checked against the instance when set.
    pub protocol: Option<Protocol>,
    pub instance: PathBuf,
    pub mode: Mode,
    /// Repetitions `N`.
    pub reps: Option<usize>,
    /// Copies `t`, or parallel repetitions for three-message games.
    pub copies: Option<usize>,
    pub restarts: Option<usize>,
    /// Runs per estimate in sample mode.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub exact: bool,
}

impl ExperimentConfig {
    pub fn new(instance: impl Into<PathBuf>, mode: Mode) -> Self {
        Self {
            protocol: None,
            instance: instance.into(),
            mode,
            reps: None,
            copies: None,
            restarts: None,
            samples: None,
            seed: None,
            output: None,
            exact: false,
        }
    }

    pub fn validate(&self, protocol: Protocol) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(p) = self.protocol {
            if p != protocol {
                return bad(format!("config says {p} but the instance is {protocol}"));
            }
        }
        if self.mode == Mode::Sample && self.seed.is_none() {
            return bad("sample mode needs a seed".into());
        }
        if self.reps == Some(0) || self.copies == Some(0) || self.samples == Some(0) {
            return bad("counts must be positive".into());
        }
        match protocol {
            Protocol::Qma => {
                if self.reps.is_some() && self.copies.is_some() {
                    return bad("give either reps or copies, not both".into());
                }
                if self.copies.is_some() && self.mode != Mode::Analytic {
                    return bad("copies apply to analytic mode only".into());
                }
                if self.restarts.is_some() {
                    return bad("restarts apply to three-message games only".into());
                }
            }
            Protocol::Qam => {
                if self.copies.is_some() || self.restarts.is_some() {
                    return bad("two-message games take reps only".into());
                }
            }
            Protocol::Qmam => {
                if self.mode != Mode::Analytic {
                    return bad(format!("{} mode is not defined for qmam", self.mode));
                }
                if self.reps.is_some() {
                    return bad("qmam takes copies for parallel repetition, not reps".into());
                }
                if self.exact {
                    return bad("qmam optimization has no exact mode".into());
                }
            }
        }
        Ok(())
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 3,
        Error::Json(_)
        | Error::Csv(_)
        | Error::Parse { .. }
        | Error::InvalidGate(_)
        | Error::WidthMismatch { .. }
        | Error::Thresholds(_)
        | Error::Instance(_)
        | Error::MissingCoin(_)
        | Error::Config(_) => 4,
        Error::CapExceeded { .. } | Error::ExactOverflow { .. } => 5,
        _ => 6,
    }
}

/// Exit status when every check passed or some failed.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;

/// Writes to a sibling temporary file and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
