fn main() {
    std::process::exit(rcplab::cli::run(std::env::args_os()));
}
