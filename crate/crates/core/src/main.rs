use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seedsweep::io::{
    emit_outputs, generate_synthetic, read_results, write_dataset, write_results, OutputFormat,
    Overrides, RunConfig,
};
use seedsweep::sweep::{run_sweep, summarize, ModelKind};
use seedsweep::{Error, ErrorKind};

/// Run mixture-exposure models across many seeds and summarize the spread.
#[derive(Parser)]
#[command(name = "seedsweep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a sweep described by a config file.
    Run(RunArgs),
    /// Write the config's synthetic dataset as CSV.
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-aggregate a saved results.json.
    Summarize {
        /// results.json written by `run`.
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Check a config and its data without fitting anything.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// `a..b` (inclusive) or a comma list; overrides the config.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "SEEDSWEEP_JOBS")]
    jobs: Option<usize>,
    #[arg(long, default_value = "csv")]
    format: String,
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, Overrides, OutputFormat), Error> {
        let format = self.format.parse()?;
        let model = self.model.as_deref().map(str::parse::<ModelKind>).transpose()?;
        let cfg = RunConfig::load(&self.config)?;
        let ov = Overrides {
            model,
            seeds: self.seeds.clone(),
            jobs: self.jobs,
            output: self.out.clone(),
        };
        Ok((cfg, ov, format))
    }
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let (cfg, ov, format) = args.load()?;
    let prepared = cfg.prepare(&ov)?;
    log::info!(
        "{} over {} seeds on {} threads",
        prepared.sweep.model,
        prepared.sweep.seeds.len(),
        prepared.sweep.parallelism
    );
    let results = run_sweep(&prepared.dataset, &prepared.sweep)?;
    let summary = summarize(&results)?;
    let written = emit_outputs(&summary, &prepared.output, format)?;
    write_results(&results, &prepared.output.join("results.json"))?;
    let failed = summary.failures.len();
    println!(
        "{}: {} of {} seeds succeeded; {} files in {}",
        summary.model,
        summary.seeds.len(),
        summary.n_seeds,
        written.len() + 1,
        prepared.output.display()
    );
    if failed > 0 {
        eprintln!("warning: {failed} seed(s) failed; see failures.csv");
    }
    Ok(())
}

fn validate(args: &RunArgs) -> Result<(), Error> {
    let (cfg, ov, _) = args.load()?;
    let p = cfg.prepare(&ov)?;
    println!(
        "ok: model {}, {} seeds, n = {}, {} exposures in {} groups, {} covariates",
        p.sweep.model,
        p.sweep.seeds.len(),
        p.dataset.n(),
        p.dataset.p(),
        p.dataset.groups().n_groups(),
        p.dataset.c() - 1
    );
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run(a) => run(&a),
        Command::Validate(a) => validate(&a),
        Command::Synth { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let spec = cfg
                .synthetic
                .ok_or_else(|| Error::Config("config has no [synthetic] table".into()))?;
            let d = generate_synthetic(&spec)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                    path: dir.to_path_buf(),
                    source: e,
                })?;
            }
            write_dataset(&d, "y", &out)?;
            println!("wrote {} rows to {}", d.n(), out.display());
            Ok(())
        }
        Command::Summarize {
            results,
            out,
            format,
        } => {
            let format: OutputFormat = format.parse()?;
            let r = read_results(&results)?;
            let summary = summarize(&r)?;
            emit_outputs(&summary, &out, format)?;
            println!("summarized {} seeds into {}", summary.seeds.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            let code = match e.kind() {
                ErrorKind::Usage => {
                    eprintln!("run `seedsweep --help` for usage");
                    1
                }
                ErrorKind::Data => 2,
                ErrorKind::Runtime => 3,
            };
            ExitCode::from(code)
        }
    }
}
