fn main() {
    std::process::exit(qslr::cli::run(std::env::args_os()));
}
