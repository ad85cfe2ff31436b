fn main() {
    std::process::exit(synhomeo::cli::run(std::env::args_os()));
}
