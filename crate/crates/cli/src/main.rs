use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use clap::Parser;

use canopyflux_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CANOPYFLUX_LOG", "warn")).init();
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match panic::catch_unwind(AssertUnwindSafe(|| run(cli, &mut stdout))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        // the panic hook has already printed the message
        Err(_) => ExitCode::from(4),
    }
}
