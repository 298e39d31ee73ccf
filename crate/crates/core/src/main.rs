fn main() {
    std::process::exit(cutiga::cli::run_cli(std::env::args_os()));
}
