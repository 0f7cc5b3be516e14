fn main() {
    std::process::exit(stlmine::harness::cli::run(std::env::args_os()));
}
