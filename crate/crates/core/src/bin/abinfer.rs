fn main() {
    std::process::exit(abinfer::cli::main_with_args(std::env::args_os()));
}
