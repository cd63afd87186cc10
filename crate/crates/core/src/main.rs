fn main() {
    std::process::exit(regime_ou_core::cli::run(std::env::args_os()));
}
