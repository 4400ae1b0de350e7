fn main() {
    std::process::exit(hetnet_cli::run_command(std::env::args_os()));
}
