fn main() {
    std::process::exit(latgas::cli::run(std::env::args_os()));
}
