use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("IDPATH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("IDPATH_THREADS ignored: {e}");
        }
    }
    let cli = idpath_cli::Cli::parse();
    std::process::exit(idpath_cli::execute(&cli.command));
}
