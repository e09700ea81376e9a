use clap::Parser;

use mqrng_cli::{exit_code, run, Cli};

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let result = run(&cli.command);
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    exit_code(&result)
}
