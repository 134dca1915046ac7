//! `sdbound`: tables of large-system rate bounds and finite-size simulations.
//!
//! Exit status 0 on success, 2 for invalid input, 3 for numerical failures.
//! Errors are reported as one line on stderr.

mod args;
mod commands;
mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sdbound::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e.root() {
                sdbound::Error::InvalidDomain(_) => "invalid-domain",
                sdbound::Error::Degenerate(_) => "degenerate",
                sdbound::Error::UnsupportedHyperprior(_) => "unsupported-hyperprior",
                sdbound::Error::BracketFailure(_) => "bracket-failure",
                sdbound::Error::NoSolution(_) => "no-solution",
                sdbound::Error::Singular(_) => "singular",
                sdbound::Error::Precondition(_) => "precondition",
                sdbound::Error::At { .. } => unreachable!("root strips context"),
            },
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
        }
    }
}

fn fail(kind: &str, msg: &str, code: u8) -> ExitCode {
    let line = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("sdbound: error[{kind}]: {line}");
    ExitCode::from(code)
}

fn write_report(report: &output::Report, cli: &Cli) -> Result<(), CliError> {
    let io_err = |path: &Option<PathBuf>| {
        let path = path.as_ref().map_or("<stdout>".to_string(), |p| p.display().to_string());
        move |source| CliError::Io { path, source }
    };
    match &cli.output {
        Some(p) => {
            let file = File::create(p).map_err(io_err(&cli.output))?;
            let mut w = BufWriter::new(file);
            report.write(cli.format, &mut w).and_then(|_| w.flush()).map_err(io_err(&cli.output))
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            report.write(cli.format, &mut w).and_then(|_| w.flush()).map_err(io_err(&None))
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let report = match &cli.command {
        Command::Estimator(a) => commands::estimator(a),
        Command::Detector(a) => commands::detector(a),
        Command::Rate(a) => commands::rate(a),
        Command::Hh(a) => commands::hh(a),
        Command::Lowsnr(a) => commands::lowsnr(a),
        Command::Gain(a) => commands::gain(a),
        Command::Sweep(a) => commands::sweep_cmd(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Offdiag(a) => commands::offdiag(a),
    }?;
    write_report(&report, cli)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return ExitCode::from(if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    2
                } else {
                    0
                });
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", first, 2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (`| head`) is not a failure.
        Err(CliError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), e.exit_code()),
    }
}
