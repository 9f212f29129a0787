use clap::Parser;

fn main() {
    let cli = minkvec_cli::Cli::parse();
    std::process::exit(minkvec_cli::run(cli));
}
