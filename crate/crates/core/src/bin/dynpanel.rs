fn main() {
    std::process::exit(dynpanel::cli::run(std::env::args_os().collect()));
}
