use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match lmrk_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors share the config-error code; exit 2 is reserved for aborted runs.
            let _ = e.print();
            std::process::exit(if e.use_stderr() { lmrk_cli::EXIT_CONFIG } else { lmrk_cli::EXIT_OK });
        }
    };
    std::process::exit(lmrk_cli::dispatch(cli));
}
