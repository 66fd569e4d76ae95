fn main() {
    std::process::exit(cos2gate_cli::run(std::env::args_os()));
}
