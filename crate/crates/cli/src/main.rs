//! `touchpoint`: certifications, envelope studies and solver runs as CSV.
//!
//! Exit codes: 0 pass, 1 failure, 2 expected violation certified, 64 bad
//! arguments.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{value_parser, Arg, ArgMatches, Command};

use commands::{Status, COMMANDS};
use config::{CliError, RunConfig};

const EXIT_USAGE: u8 = 64;

fn cli() -> Command {
    let mut cmd = Command::new("touchpoint")
        .about("Numerical checks for degenerate elliptic equations F[psi] on the boundary of a matrix set")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .value_parser(value_parser!(PathBuf))
                .help("key=value file, one per line, # comments"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .global(true)
                .value_name("FILE")
                .value_parser(value_parser!(PathBuf))
                .help("write the CSV here instead of stdout"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .global(true)
                .value_name("N")
                .value_parser(value_parser!(u64))
                .help("random seed"),
        );
    for spec in COMMANDS {
        let mut sub = Command::new(spec.name).about(spec.about);
        for k in spec.keys {
            let help =
                if k.default.is_empty() { k.help.to_string() } else { format!("{} [default: {}]", k.help, k.default) };
            sub = sub.arg(Arg::new(k.name).long(k.name).value_name("VALUE").allow_hyphen_values(true).help(help));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn resolve(name: &str, m: &ArgMatches) -> Result<RunConfig, CliError> {
    let spec = commands::find(name).expect("subcommand registered");
    let flags: Vec<(String, String)> = spec
        .keys
        .iter()
        .filter(|k| m.value_source(k.name) == Some(ValueSource::CommandLine))
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
        .collect();
    RunConfig::resolve(
        name,
        spec.keys,
        m.get_one::<PathBuf>("config").map(PathBuf::as_path),
        &flags,
        m.get_one::<PathBuf>("out").cloned(),
        m.get_one::<u64>("seed").copied(),
    )
}

fn run(name: &str, m: &ArgMatches) -> Result<Status, CliError> {
    let cfg = resolve(name, m)?;
    let spec = commands::find(name).expect("subcommand registered");
    let mut body = Vec::new();
    let status = (spec.run)(&cfg, &mut body)?;
    let mut text = cfg.header().into_bytes();
    text.extend_from_slice(&body);
    match &cfg.out {
        Some(path) => fs::write(path, &text)?,
        None => std::io::stdout().lock().write_all(&text)?,
    }
    Ok(status)
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match run(name, sub) {
        Ok(status) => ExitCode::from(status.code()),
        Err(CliError::Usage(msg)) => {
            eprintln!("touchpoint {name}: {msg}");
            eprintln!("run 'touchpoint {name} --help' for the accepted keys");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("touchpoint {name}: {e}");
            ExitCode::from(1)
        }
    }
}
