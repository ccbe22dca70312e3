fn main() {
    std::process::exit(tnvae::cli::run(std::env::args_os()));
}
