fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ORBITSPLIT_LOG", "warn")).init();
    std::process::exit(orbitsplit::experiment::run_cli(std::env::args_os()));
}
