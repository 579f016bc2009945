fn main() {
    std::process::exit(geodetect::cli::run());
}
