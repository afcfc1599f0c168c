fn main() {
    std::process::exit(splashguard_cli::run(std::env::args().skip(1).collect()));
}
