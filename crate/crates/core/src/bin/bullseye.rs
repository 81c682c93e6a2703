fn main() {
    std::process::exit(bullseye::cli::run(std::env::args_os()));
}
