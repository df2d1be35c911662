fn main() {
    std::process::exit(ncrsim::cli::main_with_args(std::env::args_os()));
}
