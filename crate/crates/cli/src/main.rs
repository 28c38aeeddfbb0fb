fn main() {
    std::process::exit(chfif_cli::main_with_env());
}
