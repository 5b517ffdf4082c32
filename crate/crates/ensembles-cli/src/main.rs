fn main() {
    std::process::exit(ensembles_cli::run(std::env::args_os()));
}
