fn main() {
    std::process::exit(hsharp::cli::main_from(std::env::args_os()));
}
