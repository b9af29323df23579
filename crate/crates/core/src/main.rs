fn main() {
    std::process::exit(blackwell::cli::run_main());
}
