use clap::Parser;
use std::io::Write;

fn main() {
    let cli = ekmu::cli::Cli::parse();
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let result = ekmu::cli::run(&cli, &mut out);
    if let Err(e) = out.flush() {
        eprintln!("error: flush failed: {e}");
        std::process::exit(3);
    }
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}
