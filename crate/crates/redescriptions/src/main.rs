fn main() {
    std::process::exit(redescriptions::cli::run_cli(std::env::args_os()));
}
