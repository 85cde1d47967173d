fn main() {
    std::process::exit(scfraud::cli::run(std::env::args_os()));
}
