fn main() {
    std::process::exit(quantcell::cli::run(std::env::args()));
}
