use std::process::ExitCode;

use clap::Parser;
use torusforge_cli::{exit, run, thread_cap, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match thread_cap().and_then(|cap| {
        if let Some(n) = cap {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| torusforge_cli::RunError::Invariant(e.to_string()))?;
        }
        run(&cli, &mut std::io::stdout().lock())
    }) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("torusforge: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
