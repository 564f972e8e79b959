//! `logspiral`: reproducible experiments on logarithmic-spiral vorticity.
//!
//! Every subcommand reads flat `key = value` settings from `--config` and
//! flags, validates them all before any work starts, and writes CSV/JSON
//! files plus a `manifest.json` into `--out-dir`.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 numerical event, 4 internal
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgMatches, Command};

mod commands;
mod config;
mod ic;
mod output;

use commands::{Context, Failure, COMMANDS, EXIT_INTERNAL};
use config::Settings;

fn cli() -> Command {
    let mut app = Command::new("logspiral")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Logarithmic-spiral solutions of the 2D Euler equations: experiments with CSV/JSON output")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("out_dir")
                .long("out-dir")
                .global(true)
                .value_name("DIR")
                .value_parser(value_parser!(PathBuf))
                .default_value("out")
                .help("directory for all output files"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .global(true)
                .value_name("N")
                .value_parser(value_parser!(u64))
                .default_value("0")
                .help("seed for randomised initial data"),
        )
        .arg(
            Arg::new("threads")
                .long("threads")
                .global(true)
                .value_name("N")
                .value_parser(value_parser!(usize))
                .help("worker threads (default: all cores); outputs do not depend on it"),
        )
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .value_parser(value_parser!(PathBuf))
                .help("flat `key = value` settings; flags override the file"),
        );
    for c in COMMANDS {
        let sub = (c.keys)().iter().fold(Command::new(c.name).about(c.about), |cmd, k| cmd.arg(k.arg()));
        app = app.subcommand(sub);
    }
    app
}

fn dispatch(matches: &ArgMatches) -> Result<commands::Status, Failure> {
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let command = COMMANDS.iter().find(|c| c.name == name).expect("registered subcommand");
    let file = sub.get_one::<PathBuf>("config");
    let settings = Settings::load(command.name, (command.keys)(), file.map(PathBuf::as_path), sub)?;
    let ctx = Context {
        out_dir: sub.get_one::<PathBuf>("out_dir").cloned().unwrap_or_else(|| PathBuf::from("out")),
        seed: sub.get_one::<u64>("seed").copied().unwrap_or(0),
    };
    if let Some(&threads) = sub.get_one::<usize>("threads") {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Internal(format!("thread pool: {e}")))?;
    }
    (command.run)(&settings, &ctx)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let code = match dispatch(&matches) {
        Ok(status) => {
            if status.code != 0 {
                eprintln!("logspiral: run ended with {}", status.outcome);
            }
            status.code
        }
        Err(f) => {
            eprintln!("{f}");
            f.code()
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_INTERNAL as u8))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn zero_beta_is_rejected_before_dispatch() {
        let m = cli().try_get_matches_from(["logspiral", "dirac", "--beta", "0", "--atoms", "1:0"]).unwrap();
        let err = dispatch(&m).unwrap_err();
        assert_eq!(err.code(), commands::EXIT_CONFIG);
        assert!(err.to_string().contains("beta must be nonzero"), "{err}");
    }

    #[test]
    fn negative_values_parse_as_values() {
        let m = cli().try_get_matches_from(["logspiral", "kernel", "--beta", "-1.5"]).unwrap();
        let (_, sub) = m.subcommand().unwrap();
        assert_eq!(sub.get_one::<String>("beta").map(String::as_str), Some("-1.5"));
    }
}
