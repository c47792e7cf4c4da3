fn main() {
    std::process::exit(magl::cli::main_with(std::env::args_os()));
}
