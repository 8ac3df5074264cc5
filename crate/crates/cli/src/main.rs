fn main() {
    std::process::exit(subopt_cli::run(std::env::args_os()));
}
