fn main() {
    std::process::exit(comper::cli::run(std::env::args_os()));
}
