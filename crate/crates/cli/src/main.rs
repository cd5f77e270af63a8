use clap::Parser;
use irefined_cli::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.command.args().threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            std::process::exit(2);
        }
    }
    match execute(&cli) {
        Ok(m) => {
            println!(
                "{}: {} artifacts, projections_run={} hill_climbs_run={} regressors_trained={}",
                m.command,
                m.artifacts.len(),
                m.counters.projections_run,
                m.counters.hill_climbs_run,
                m.counters.regressors_trained
            );
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
