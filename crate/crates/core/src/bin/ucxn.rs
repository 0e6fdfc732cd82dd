fn main() {
    std::process::exit(ucxn::cli::run(std::env::args_os()));
}
