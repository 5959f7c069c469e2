fn main() {
    let code = fpp_core::cli::run_cli(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
