fn main() {
    std::process::exit(permissive::cli::main());
}
