fn main() {
    std::process::exit(opinion_cli::run(std::env::args_os()));
}
