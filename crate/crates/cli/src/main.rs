fn main() {
    std::process::exit(scq_cli::run(std::env::args_os()));
}
