use clap::Parser;

fn main() {
    let cli = sumcard_cli::Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    std::process::exit(sumcard_cli::exit_status(sumcard_cli::run(&cli, &mut out)));
}
