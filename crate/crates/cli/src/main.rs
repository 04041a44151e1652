use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use focustwist::commands::CliError;
use focustwist::{execute, Cli, Command};

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.resolve()?;
    let out = execute(cli.command, &cfg)?;
    out.write_to(&cfg.out, &format!("{}.json", cli.command.name()))?;
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&out.summary).expect("serialisable summary"));
    if cli.command == Command::Report && out.summary["all_pass"] != serde_json::Value::Bool(true) {
        return Err(CliError::Acceptance("at least one criterion did not pass".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
