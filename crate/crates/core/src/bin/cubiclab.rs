fn main() {
    std::process::exit(cubiclab::cli::main_with_args(std::env::args_os()));
}
