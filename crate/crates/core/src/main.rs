fn main() {
    std::process::exit(surface_darcy::cli::run(std::env::args_os()));
}
