fn main() {
    std::process::exit(silent_tracker::cli::run(std::env::args_os()));
}
