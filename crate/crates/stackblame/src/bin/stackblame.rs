fn main() {
    std::process::exit(stackblame::cli::run(std::env::args_os()));
}
