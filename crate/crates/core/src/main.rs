fn main() {
    std::process::exit(photon_clock_rng::cli::run(std::env::args()));
}
