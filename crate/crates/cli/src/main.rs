mod config;
mod csvio;
mod error;
mod fmt;
mod output;
mod pgm;
mod svg;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{value_parser, Arg, ArgMatches, Command};

use crate::config::{help_text, Config};
use crate::error::{CliError, CliResult};
use crate::output::write_artifacts;
use crate::tasks::{Task, TASKS};

fn cli() -> Command {
    let mut cmd = Command::new("locuskit")
        .about("Localization-kernel experiments: one subcommand per task, configured by a JSON file")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .after_help("Set LOCUSKIT_THREADS to cap worker threads.");
    for t in TASKS {
        cmd = cmd.subcommand(
            Command::new(t.name)
                .about(t.about)
                .arg(
                    Arg::new("config")
                        .long("config")
                        .value_name("PATH")
                        .required(true)
                        .value_parser(value_parser!(PathBuf))
                        .help("JSON config file"),
                )
                .arg(
                    Arg::new("out")
                        .long("out")
                        .value_name("DIR")
                        .default_value("out")
                        .value_parser(value_parser!(PathBuf))
                        .help("output directory"),
                )
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_name("N")
                        .value_parser(value_parser!(u64))
                        .help("seed; overrides the config's seed"),
                )
                .after_help(help_text(t.keys)),
        );
    }
    cmd
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("LOCUSKIT_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::validation(format!("LOCUSKIT_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::validation(e.to_string()))
}

fn execute(task: &Task, m: &ArgMatches) -> CliResult<()> {
    configure_threads()?;
    let path = m.get_one::<PathBuf>("config").expect("required");
    let out = m.get_one::<PathBuf>("out").expect("defaulted");
    let cfg = Config::load(task.name, task.keys, path, m.get_one::<u64>("seed").copied())?;
    let start = Instant::now();
    let mut a = (task.run)(&cfg)?;
    a.metric("task", task.name);
    a.metric("runtime_ms", start.elapsed().as_secs_f64() * 1e3);
    if let Some(s) = cfg.user_seed() {
        a.metric("seed", s);
    }
    std::fs::create_dir_all(out)?;
    write_artifacts(out, &a)
}

fn main() -> ExitCode {
    let m = cli().get_matches();
    let (name, sub) = m.subcommand().expect("subcommand required");
    let task = tasks::find(name).expect("registered subcommand");
    match execute(task, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
