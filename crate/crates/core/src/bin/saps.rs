fn main() {
    std::process::exit(saps::cli::main_with_args(std::env::args_os()));
}
