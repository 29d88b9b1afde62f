fn main() {
    std::process::exit(covcraft::cli::run(std::env::args_os()));
}
