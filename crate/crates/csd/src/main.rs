fn main() {
    std::process::exit(csd::cli::main_with(std::env::args_os()));
}
