fn main() {
    std::process::exit(oscillax::cli::run_cli(std::env::args_os().skip(1)));
}
