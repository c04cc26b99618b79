use clap::Parser;

fn main() {
    let cli = rlpa::cli::Cli::parse();
    let result = rlpa::cli::run(&cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    std::process::exit(rlpa::cli::exit_code(&result));
}
