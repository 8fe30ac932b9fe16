fn main() {
    std::process::exit(splitforge_cli::run(std::env::args_os()));
}
