fn main() {
    std::process::exit(posce_core::cli::main_with_args(std::env::args_os()));
}
