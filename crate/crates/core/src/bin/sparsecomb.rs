fn main() {
    std::process::exit(sparsecomb::cli::run(std::env::args_os()));
}
