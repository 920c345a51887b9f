fn main() {
    std::process::exit(dualrdm::cli::run(std::env::args().collect()));
}
