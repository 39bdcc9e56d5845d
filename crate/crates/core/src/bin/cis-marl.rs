fn main() {
    std::process::exit(cis_marl::cli::main_with_args(std::env::args_os()));
}
