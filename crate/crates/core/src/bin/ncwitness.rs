fn main() {
    std::process::exit(ncwitness::cli::run(std::env::args_os()));
}
