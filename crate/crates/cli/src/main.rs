fn main() {
    std::process::exit(macroflow_cli::run(std::env::args_os()));
}
