fn main() {
    std::process::exit(ave_core::cli::run(std::env::args_os()));
}
