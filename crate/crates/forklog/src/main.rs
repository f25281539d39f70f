fn main() {
    std::process::exit(forklog::cli::main());
}
