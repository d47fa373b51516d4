use std::process::ExitCode;

use clap::Parser;
use poserefer::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("POSEREFER_LOG", "info")).init();
    let cli = Cli::parse();
    match run(cli).map_err(anyhow::Error::from) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let causes: Vec<String> = err.chain().skip(1).map(ToString::to_string).collect();
            let kind = match err.downcast_ref::<poserefer::Error>() {
                Some(poserefer::Error::ConfigHash { .. }) => "config_hash_mismatch",
                Some(poserefer::Error::Io { .. }) => "io",
                Some(poserefer::Error::Parse { .. }) => "parse",
                Some(poserefer::Error::Config(_)) => "config",
                _ => "error",
            };
            let report = serde_json::json!({ "error": kind, "message": err.to_string(), "causes": causes });
            eprintln!("{report}");
            ExitCode::from(if kind == "config_hash_mismatch" { 3 } else { 1 })
        }
    }
}
