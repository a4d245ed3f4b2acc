fn main() {
    std::process::exit(tracerag::cli::main_with_args(std::env::args_os()));
}
