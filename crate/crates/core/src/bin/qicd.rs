fn main() {
    std::process::exit(qicd::cli::main_with_args(std::env::args_os()));
}
