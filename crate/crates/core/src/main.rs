fn main() {
    std::process::exit(statdist::cli::main_with_args(std::env::args_os()));
}
