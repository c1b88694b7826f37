fn main() {
    std::process::exit(saldl::cli::main_from_env());
}
