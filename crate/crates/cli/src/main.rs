fn main() {
    std::process::exit(bayesaf::run(std::env::args_os()));
}
