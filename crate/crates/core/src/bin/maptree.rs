use std::process::ExitCode;

use maptree::cli::{parse_args, run};

fn main() -> ExitCode {
    let cfg = match parse_args(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(Err(clap)) => {
            let _ = clap.print();
            return ExitCode::SUCCESS;
        }
        Err(Ok(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cfg.verbosity {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cfg) {
        Ok(manifest) => {
            for w in &manifest.warnings {
                log::warn!("{w}");
            }
            println!("{}", cfg.out.join("manifest.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.module());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
