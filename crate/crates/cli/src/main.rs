use clap::Parser;

fn main() {
    let cli = hexlab_cli::Cli::parse();
    if let Err(e) = hexlab_cli::run(cli) {
        eprintln!("hexlab: {e}");
        std::process::exit(e.exit_code());
    }
}
