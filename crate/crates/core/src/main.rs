fn main() {
    std::process::exit(unishift::cli::run(std::env::args_os()));
}
