fn main() {
    std::process::exit(flatdec::cli::main_with_args(std::env::args_os()));
}
