fn main() {
    std::process::exit(cda_arena::cli::main_with(std::env::args_os()));
}
