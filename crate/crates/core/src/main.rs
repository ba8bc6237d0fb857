fn main() {
    std::process::exit(floquet_dirac::cli::main_from(std::env::args_os()));
}
