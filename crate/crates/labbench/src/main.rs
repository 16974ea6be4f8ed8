fn main() {
    std::process::exit(labbench::cli::run(std::env::args_os()));
}
