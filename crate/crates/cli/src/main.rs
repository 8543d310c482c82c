use clap::Parser;

fn main() {
    std::process::exit(qinstrument_cli::main_with(qinstrument_cli::Cli::parse()));
}
