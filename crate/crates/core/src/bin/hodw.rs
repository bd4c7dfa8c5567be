fn main() {
    std::process::exit(hodw::cli::run_from(std::env::args_os()));
}
