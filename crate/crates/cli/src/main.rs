use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = shiftbt_cli::Cli::parse();
    std::process::exit(shiftbt_cli::exit_code(shiftbt_cli::run(cli)));
}
