use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use zonalsim::config::RunConfig;
use zonalsim::suites::{run_suite, Suite};

/// Rotating shallow-water experiments on surfaces of revolution.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// verify-operators, verify-kernel, simulate, average, limit, blowup, all or project
    suite: String,
    /// Key-value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config and ZONALSIM_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot read by `project`.
    #[arg(long)]
    input: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> zonalsim::Result<bool> {
        let suite: Suite = cli.suite.parse()?;
        let cfg = RunConfig::parse_file(&cli.config)?.with_overrides(cli.out.clone(), cli.seed);
        let hash = cfg.hash();
        let mut ok = true;
        for rep in run_suite(suite, &cfg, cli.input.as_deref())? {
            print!("{}", rep.render(&hash));
            ok &= rep.passed();
        }
        Ok(ok)
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("zonalsim: {e}");
            ExitCode::from(2)
        }
    }
}
