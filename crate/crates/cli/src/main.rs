fn main() {
    std::process::exit(hodohj_cli::run(std::env::args_os()));
}
