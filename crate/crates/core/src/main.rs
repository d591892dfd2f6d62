fn main() {
    let code = auxsbm::cli::dispatch(std::env::args_os());
    std::process::exit(code);
}
