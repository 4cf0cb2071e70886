fn main() {
    std::process::exit(razn_cli::run());
}
