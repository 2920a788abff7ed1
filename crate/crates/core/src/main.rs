fn main() {
    std::process::exit(frontlab::cli::main_with_args(std::env::args_os()));
}
