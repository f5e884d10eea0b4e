fn main() {
    std::process::exit(aroc_cli::run(std::env::args_os()));
}
