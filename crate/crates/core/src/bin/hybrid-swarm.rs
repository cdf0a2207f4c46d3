fn main() {
    std::process::exit(hybrid_swarm::cli::run_cli(std::env::args_os()));
}
