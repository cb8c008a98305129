fn main() {
    std::process::exit(arakelov_theta::cli::run(std::env::args_os()));
}
