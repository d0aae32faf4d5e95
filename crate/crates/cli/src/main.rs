fn main() {
    std::process::exit(pss_cli::run_command(std::env::args_os()));
}
