use clap::Parser;

use mfchaos::cli::{dispatch, log_level, Cli};

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(log_level(&cli)).parse_default_env().init();
    let code = dispatch(&cli, &mut std::io::stdout().lock());
    std::process::exit(code);
}
