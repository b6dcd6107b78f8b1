use clap::Parser;

fn main() {
    let config = telegraph_forms::cli::RunConfig::parse();
    match telegraph_forms::cli::run(&config) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
