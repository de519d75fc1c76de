fn main() {
    std::process::exit(loggas_sle::cli::main_from_env());
}
