fn main() {
    std::process::exit(flexsched::cli::run_from_args(std::env::args_os()));
}
