fn main() {
    std::process::exit(rdball::cli::run(std::env::args_os()));
}
