fn main() {
    std::process::exit(seqproj::cli::run(std::env::args_os()));
}
