fn main() {
    std::process::exit(objstore_emu::cli::run(std::env::args_os()));
}
