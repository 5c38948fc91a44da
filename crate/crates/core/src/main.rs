fn main() {
    std::process::exit(dmp_features::cli::main_with_args(std::env::args_os()));
}
