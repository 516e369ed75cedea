fn main() {
    std::process::exit(ksubset_core::cli::dispatch(std::env::args_os()));
}
