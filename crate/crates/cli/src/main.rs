fn main() {
    std::process::exit(spikegap_cli::run_from_args(std::env::args_os()));
}
