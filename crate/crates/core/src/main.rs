fn main() {
    std::process::exit(chainhac::cli::main_with_args(std::env::args_os()));
}
