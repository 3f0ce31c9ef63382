use clap::Parser;

fn main() {
    let cli = casimir::Cli::parse();
    if let Err(e) = casimir::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
