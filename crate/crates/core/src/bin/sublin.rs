fn main() {
    std::process::exit(sublin::cli::run(std::env::args_os()));
}
