fn main() {
    std::process::exit(usf_cli::parse_and_dispatch(std::env::args_os()));
}
