fn main() {
    std::process::exit(coherence::cli::main_with_args(std::env::args_os()));
}
