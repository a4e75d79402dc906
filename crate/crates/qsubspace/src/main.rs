use std::process::ExitCode;

use clap::Parser;
use qsubspace::config::Cli;
use qsubspace::{exit, run, CliError};

fn report_error(err: &CliError, out_dir: Option<&std::path::Path>) {
    let body = serde_json::to_string_pretty(&err.to_json()).expect("error serializes");
    eprintln!("{body}");
    if let Some(dir) = out_dir {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), &body);
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let out_hint = cli.out.clone();
    let cfg = match cli.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            report_error(&e, out_hint.as_deref());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cfg) {
        Ok(art) => {
            for f in &art.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            report_error(&e, Some(&cfg.output.dir));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
