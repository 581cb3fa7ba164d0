fn main() {
    randers_lab::cli::configure_threads();
    std::process::exit(randers_lab::cli::main_with_args(std::env::args_os()));
}
