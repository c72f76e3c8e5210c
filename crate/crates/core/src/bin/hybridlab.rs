fn main() {
    std::process::exit(hybridlab::cli::main_from(std::env::args_os()));
}
