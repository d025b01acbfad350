fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CANCOACH_LOG", "warn")).init();
    std::process::exit(cancoach::cli::main_with_args(std::env::args_os()));
}
