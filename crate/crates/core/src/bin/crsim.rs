fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CRSIM_LOG", "error"))
        .target(env_logger::Target::Stderr)
        .init();
    let code = crsim_core::cli::run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
