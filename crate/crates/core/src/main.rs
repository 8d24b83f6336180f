fn main() {
    std::process::exit(nuhcert::cli::main_with_args(std::env::args_os()));
}
