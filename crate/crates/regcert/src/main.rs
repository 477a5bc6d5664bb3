use std::process::ExitCode;

use clap::Parser;
use regcert::{run, Cli, Status};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Indeterminate) => ExitCode::from(2),
        Err(e) => {
            let json = serde_json::to_string(&e).unwrap_or_else(|_| format!("{{\"kind\":\"internal\",\"message\":{:?}}}", e.message));
            eprintln!("{json}");
            ExitCode::from(1)
        }
    }
}
