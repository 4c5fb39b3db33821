fn main() {
    std::process::exit(flowsentry_cli::run());
}
