fn main() {
    std::process::exit(satidi_cli::run(std::env::args_os()));
}
