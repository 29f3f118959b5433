fn main() {
    std::process::exit(gridsep::cli::main());
}
