fn main() {
    std::process::exit(fredkin_sim::cli::run(std::env::args_os()));
}
