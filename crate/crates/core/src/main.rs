fn main() {
    std::process::exit(ptube::cli::main_with_args(std::env::args_os()));
}
