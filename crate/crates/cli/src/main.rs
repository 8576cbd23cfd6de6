use clap::Parser;
use mwmsr_cli::Cli;

fn main() {
    let cli = Cli::parse();
    std::process::exit(mwmsr_cli::run(&cli));
}
