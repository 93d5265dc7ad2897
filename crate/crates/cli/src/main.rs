fn main() {
    std::process::exit(vitalscan_cli::main_with(std::env::args_os()));
}
