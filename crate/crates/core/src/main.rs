fn main() {
    env_logger::init();
    std::process::exit(avsync_core::cli::run(std::env::args_os()));
}
