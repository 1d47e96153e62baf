fn main() {
    std::process::exit(essrate::cli::main_with_args(std::env::args_os()));
}
