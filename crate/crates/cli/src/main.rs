use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::Parser;
use nuexo_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
        eprintln!("nuexo: cannot install signal handler: {e}");
    }
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    match run(cli, &mut stdin.lock(), &mut stdout.lock(), stop) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nuexo: {e:#}");
            ExitCode::FAILURE
        }
    }
}
