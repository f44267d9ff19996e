fn main() {
    std::process::exit(isofactor::cli::run(std::env::args_os()));
}
