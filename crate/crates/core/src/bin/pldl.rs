fn main() {
    std::process::exit(pldl::cli::run(std::env::args_os()));
}
