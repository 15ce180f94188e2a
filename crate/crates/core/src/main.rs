fn main() {
    std::process::exit(relpos::cli::main_with_args(std::env::args_os()));
}
