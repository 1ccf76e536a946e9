fn main() {
    std::process::exit(nli_cartography::cli::main_with_args(std::env::args_os()));
}
