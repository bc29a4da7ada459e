fn main() {
    std::process::exit(ensnet::cli::dispatch(std::env::args().skip(1)));
}
