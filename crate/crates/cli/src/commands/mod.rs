//! Subcommand registry and the shared run context.

use std::fmt;
use std::io;
use std::path::PathBuf;

use logspiral::kernel::SpiralParams;
use logspiral::Error;

use crate::config::{ConfigErrors, Key, Kind, Reader, Settings};
use crate::output::Run;

mod dirac;
mod evolve;
mod kernel;
mod reconstruct;
mod selfsimilar;
mod sheetlimit;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EVENT: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// How a run ended; files are on disk for every variant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Status {
    pub outcome: String,
    pub code: i32,
}

impl Status {
    pub fn ok(outcome: impl Into<String>) -> Self {
        Self { outcome: outcome.into(), code: EXIT_OK }
    }

    pub fn event(outcome: impl Into<String>) -> Self {
        Self { outcome: outcome.into(), code: EXIT_EVENT }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigErrors),
    Numerical(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_EVENT,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Numerical(e) => write!(f, "numerical event: {e}"),
            Failure::Internal(e) => write!(f, "internal error: {e}"),
        }
    }
}

impl From<ConfigErrors> for Failure {
    fn from(e: ConfigErrors) -> Self {
        Failure::Config(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Internal(format!("i/o: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ZeroBeta
            | Error::NonFiniteBeta(_)
            | Error::InvalidFold
            | Error::AsymptoticFold(_)
            | Error::GridSize(_)
            | Error::Cfl { .. }
            | Error::CoincidentAtoms(..)
            | Error::AtomIndex { .. }
            | Error::OverlappingSupports(..)
            | Error::Resolution { .. }
            | Error::InvalidArgument(_) => Failure::Config(ConfigErrors(vec![e.to_string()])),
            Error::NonFinite(_) | Error::PastPole { .. } | Error::Aborted(_) | Error::OnSingularity { .. } => {
                Failure::Numerical(e.to_string())
            }
            other => Failure::Internal(other.to_string()),
        }
    }
}

/// Global settings that are not part of any experiment's configuration.
#[derive(Clone, Debug)]
pub struct Context {
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Context {
    pub fn open(&self, settings: &Settings) -> Result<Run, Failure> {
        Ok(Run::create(&self.out_dir, settings.command, self.seed, settings.canonical())?)
    }
}

pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: fn() -> Vec<Key>,
    pub run: fn(&Settings, &Context) -> Result<Status, Failure>,
}

pub const COMMANDS: &[Command] = &[
    Command { name: "kernel", about: kernel::ABOUT, keys: kernel::keys, run: kernel::run },
    Command { name: "evolve", about: evolve::ABOUT, keys: evolve::keys, run: evolve::run },
    Command { name: "dirac", about: dirac::ABOUT, keys: dirac::keys, run: dirac::run },
    Command { name: "selfsimilar", about: selfsimilar::ABOUT, keys: selfsimilar::keys, run: selfsimilar::run },
    Command { name: "sheetlimit", about: sheetlimit::ABOUT, keys: sheetlimit::keys, run: sheetlimit::run },
    Command { name: "reconstruct", about: reconstruct::ABOUT, keys: reconstruct::keys, run: reconstruct::run },
];

pub const BETA: Key = Key::new("beta", Kind::Float, None, "spiral pitch, nonzero");
pub const M: Key = Key::new("m", Kind::Int, Some("1"), "fold symmetry");

/// Reads `beta` and `m`; a bad value of either is reported against its key.
pub fn read_params(r: &mut Reader) -> Option<SpiralParams> {
    let beta = r.float("beta");
    let m = r.int::<u32>("m");
    let (beta, m) = (beta?, m?);
    if m == 0 {
        r.check("m", SpiralParams::new(beta, m))
    } else {
        r.check("beta", SpiralParams::new(beta, m))
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
