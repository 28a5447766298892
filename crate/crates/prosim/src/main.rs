use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = prosim::Cli::parse();
    match prosim::run(cli) {
        Ok(()) => ExitCode::from(prosim::exit::OK),
        Err(e) => {
            eprintln!("prosim: {e}");
            ExitCode::from(e.code)
        }
    }
}
