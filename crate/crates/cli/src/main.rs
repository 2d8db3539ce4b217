use clap::Parser;

fn main() {
    let cli = cablepul_cli::Cli::parse();
    std::process::exit(cablepul_cli::run(&cli));
}
