fn main() {
    std::process::exit(polysjt_cli::run(std::env::args_os()));
}
