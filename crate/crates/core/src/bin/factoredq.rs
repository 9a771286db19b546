fn main() {
    std::process::exit(factoredq::cli::run_cli(std::env::args_os()));
}
