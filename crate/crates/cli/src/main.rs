fn main() {
    std::process::exit(polystretch_cli::run_cli(std::env::args_os()));
}
