fn main() {
    std::process::exit(steep_cli::run(std::env::args_os()));
}
