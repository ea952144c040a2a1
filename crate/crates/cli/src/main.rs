fn main() {
    let code = freechoice::run(std::env::args_os());
    std::process::exit(code);
}
