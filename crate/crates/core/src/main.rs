fn main() {
    std::process::exit(sjlstm::cli::main());
}
