fn main() {
    std::process::exit(gaussconvex::cli::run(std::env::args_os()));
}
