use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use srobust_cli::commands::Output;
use srobust_cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    match run(cli) {
        Ok(Output::Json(value)) => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
            if writeln!(out, "{text}").and_then(|()| out.flush()).is_err() {
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Ok(Output::Done) => ExitCode::SUCCESS,
        Err(err) => {
            if !quiet || exit_code(&err) == 4 {
                eprintln!("srobust: error: {err:#}");
            }
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
