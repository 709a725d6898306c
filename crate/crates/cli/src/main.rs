fn main() {
    std::process::exit(gauss_cli::main_with_args(std::env::args().collect()));
}
