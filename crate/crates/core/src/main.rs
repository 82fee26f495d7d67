fn main() {
    std::process::exit(armpc::cli::run(std::env::args_os()));
}
