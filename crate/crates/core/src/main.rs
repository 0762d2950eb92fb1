fn main() {
    std::process::exit(crnmem::cli::main_with(std::env::args_os()));
}
