use clap::Parser;
use infogeo_cli::{run, Cli, EXIT_CONFIG};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("INFOGEO_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            e.print().ok();
            std::process::exit(code);
        }
    };
    std::process::exit(run(cli));
}
