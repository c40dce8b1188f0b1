fn main() {
    std::process::exit(relbosons::cli::run(std::env::args_os()));
}
