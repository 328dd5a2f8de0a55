fn main() {
    std::process::exit(crnn::run(std::env::args_os()));
}
