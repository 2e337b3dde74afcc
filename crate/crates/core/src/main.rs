fn main() {
    std::process::exit(uqkit::cli::run(std::env::args_os()));
}
