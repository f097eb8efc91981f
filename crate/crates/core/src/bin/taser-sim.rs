fn main() {
    std::process::exit(taser::cli::main_with_args(std::env::args_os()));
}
