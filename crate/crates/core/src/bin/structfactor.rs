fn main() {
    std::process::exit(structfactor::cli::run(std::env::args_os()));
}
