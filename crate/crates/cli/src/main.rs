use clap::Parser;

fn main() {
    let cli = sbgp_cli::Cli::parse();
    if let Err(e) = sbgp_cli::run(cli) {
        eprintln!("sbgp: {e}");
        std::process::exit(e.exit_code());
    }
}
