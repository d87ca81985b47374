fn main() {
    std::process::exit(rdmix::cli::run(std::env::args_os()));
}
