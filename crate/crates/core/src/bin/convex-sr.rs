fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(convex_sr::cli::main_with_args(&args));
}
