fn main() {
    std::process::exit(lapinc::cli::main_with_args(std::env::args_os()));
}
