fn main() {
    std::process::exit(effrate::cli::main_entry());
}
