fn main() {
    std::process::exit(laeo_cli::run(std::env::args_os()));
}
