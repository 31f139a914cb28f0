fn main() {
    std::process::exit(qprivamp_cli::run(std::env::args_os()));
}
