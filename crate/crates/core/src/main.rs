fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(stefan_core::cli::run(&argv));
}
