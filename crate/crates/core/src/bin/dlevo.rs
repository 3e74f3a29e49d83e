fn main() {
    std::process::exit(dlevo::cli::run_cli(std::env::args_os()));
}
