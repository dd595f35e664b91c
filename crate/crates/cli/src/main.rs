fn main() {
    std::process::exit(gcn_cli::run(std::env::args_os()));
}
