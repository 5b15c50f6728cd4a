use std::process::ExitCode;

use clap::Parser;

use rabi::cli::{Cli, Command};
use rabi::commands::{self, Outcome};

fn run(cli: &Cli) -> (rabi::CliResult<Outcome>, bool) {
    match &cli.command {
        Command::Spectrum(a) => (commands::spectrum(a), a.common.allow_flagged),
        Command::Exceptional(a) => (commands::exceptional(a), a.common.allow_flagged),
        Command::Curves(a) => (commands::curves(a), a.common.allow_flagged),
        Command::OracleCheck(a) => (commands::oracle_check(a), a.common.allow_flagged),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        (Ok(out), allow_flagged) => {
            for line in &out.summary {
                println!("{line}");
            }
            for path in &out.files {
                println!("wrote {}", path.display());
            }
            for flag in &out.flags {
                eprintln!("flagged: {flag}");
            }
            if out.flags.is_empty() || allow_flagged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        (Err(e), _) => {
            eprintln!("error: {e}");
            ExitCode::from(rabi::exit_code(&e) as u8)
        }
    }
}
