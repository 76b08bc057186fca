fn main() {
    std::process::exit(hallband::cli::run(std::env::args_os()));
}
