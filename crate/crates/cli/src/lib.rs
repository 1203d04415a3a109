//! Command-line driver for the polystretch experiments.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde::Serialize;
use serde_json::{Map, Value};

use args::{Cli, Command};
use commands::Outcome;
pub use error::CliError;
pub use report::{write_report, Report};

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: Value,
    seed: Option<u64>,
    threads: usize,
    outputs: Vec<&'a str>,
    started_unix_seconds: u64,
    runtime_seconds: f64,
}

fn dispatch(cmd: Command, m: &ArgMatches, file: Option<&Map<String, Value>>) -> Result<(String, Value, Outcome), CliError> {
    fn go<T: Serialize + serde::de::DeserializeOwned>(
        name: &str,
        args: T,
        m: &ArgMatches,
        file: Option<&Map<String, Value>>,
        run: fn(&T) -> Result<Outcome, CliError>,
    ) -> Result<(String, Value, Outcome), CliError> {
        let args = config::merge(args, m, file)?;
        let echo = serde_json::to_value(&args).expect("argument structs serialize");
        Ok((name.to_string(), echo, run(&args)?))
    }
    match cmd {
        Command::Modes(a) => go("modes", a, m, file, commands::modes),
        Command::VerifyCovariance(a) => go("verify-covariance", a, m, file, commands::verify_covariance),
        Command::Simulate(a) => go("simulate", a, m, file, commands::simulate),
        Command::Stationary(a) => go("stationary", a, m, file, commands::stationary),
        Command::FpRadial(a) => go("fp-radial", a, m, file, commands::fp_radial),
        Command::FitTail(a) => go("fit-tail", a, m, file, commands::fit_tail),
        Command::Moments(a) => go("moments", a, m, file, commands::moments),
    }
}

fn execute(cli: Cli, matches: &ArgMatches, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(config::load).transpose()?;
    let (_, sub) = matches.subcommand().expect("a subcommand is required");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let (name, echo, outcome) = pool.install(|| dispatch(cli.command, sub, file.as_ref()))?;
    let runtime = clock.elapsed().as_secs_f64();

    let Some(dir) = cli.out_dir.as_deref() else {
        let (_, primary) = &outcome.files[0];
        return stdout
            .write_all(primary.render().as_bytes())
            .map_err(|e| CliError::io("<stdout>", e));
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (file_name, report) in &outcome.files {
        write_report(report, &dir.join(file_name))?;
    }
    let manifest = Manifest {
        tool: "polystretch",
        version: env!("CARGO_PKG_VERSION"),
        command: &name,
        config: echo,
        seed: outcome.seed,
        threads: pool.current_num_threads(),
        outputs: outcome.files.iter().map(|(n, _)| n.as_str()).collect(),
        started_unix_seconds: started,
        runtime_seconds: runtime,
    };
    write_report(&Report::json(&manifest), &dir.join(MANIFEST))
}

/// Name of the per-run manifest, the only output carrying timing data.
pub const MANIFEST: &str = "manifest.json";

/// Parse `argv`, run the subcommand and return the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(argv, &mut std::io::stdout().lock())
}

/// [`run_cli`] with the primary output redirected to `stdout`.
pub fn run_cli_with<I, T>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    match execute(cli, &matches, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Whether `path` names the manifest written next to the outputs.
pub fn is_manifest(path: &Path) -> bool {
    path.file_name().is_some_and(|n| n == MANIFEST)
}
