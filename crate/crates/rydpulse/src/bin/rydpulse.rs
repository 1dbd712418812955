fn main() {
    std::process::exit(rydpulse::cli::dispatch(std::env::args_os()));
}
