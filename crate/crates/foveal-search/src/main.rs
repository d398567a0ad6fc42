fn main() {
    let cli = foveal_search::cli::parse();
    if let Err(error) = foveal_search::cli::execute(cli) {
        eprintln!("error: {error}");
        std::process::exit(1);
    }
}
