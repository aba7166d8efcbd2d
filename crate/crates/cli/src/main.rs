fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(qedlab_cli::run_cli(&args));
}
