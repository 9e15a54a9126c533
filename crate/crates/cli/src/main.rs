use clap::Parser;
use eqws_cli::commands::{run, Cli};

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("eqws: {e}");
        std::process::exit(e.exit_code());
    }
}
