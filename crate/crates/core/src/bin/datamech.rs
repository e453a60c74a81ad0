fn main() {
    std::process::exit(datamech::cli::run(std::env::args_os()));
}
