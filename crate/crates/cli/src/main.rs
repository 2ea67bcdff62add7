use clap::Parser;

fn main() {
    let cli = tampc_cli::Cli::parse();
    if let Err(e) = tampc_cli::execute(cli) {
        eprintln!("tampc: {e}");
        std::process::exit(e.exit_code());
    }
}
