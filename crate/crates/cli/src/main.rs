fn main() { std::process::exit(micropolar_cli::dispatch(std::env::args().collect())); }
