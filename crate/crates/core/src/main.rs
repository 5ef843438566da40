fn main() {
    std::process::exit(svtscope::cli::run(std::env::args_os()));
}
