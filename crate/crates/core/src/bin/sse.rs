fn main() {
    std::process::exit(sse_core::cli::main());
}
