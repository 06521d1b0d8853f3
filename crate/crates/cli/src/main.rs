use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pnfem::config::{parse_config, ReportFormat, StudyConfig};
use pnfem::harmonics::{AngularOperators, SphericalBasis};
use pnfem::mms::CasePreset;
use pnfem::study::run_study_with;
use pnfem::system::{CheckpointFormat, CheckpointWriter};
use pnfem::Error;

#[derive(Parser)]
#[command(name = "pnfem", version, about = "P_N finite-element Fokker-Planck solver: convergence studies and diagnostics")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PNFEM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and write its report.
    Run(RunArgs),
    /// Run the operator, coercivity, consistency and stability checks.
    Check,
    /// Write the angular operator matrices as CSV.
    DumpOperators {
        /// Expansion order N (odd).
        #[arg(long, default_value_t = 1)]
        order: i64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Study definition (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Run a preset study with its defaults instead of a config file.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<CasePreset>,
    /// Output directory.
    #[arg(long, default_value = "pnfem-out")]
    out: PathBuf,
    /// Report format (overrides the config).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Force deterministic execution.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

fn parse_preset(s: &str) -> Result<CasePreset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure classes, mapped to the process exit status.
enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::UnknownPreset(_)
            | Error::InvalidOrder(_)
            | Error::InvalidGrid(_)
            | Error::DegenerateMesh(_)
            | Error::InvalidHarmonic { .. }
            | Error::InvalidExactness(_) => Failure::Validation(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn output_error(path: &Path, e: io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn load_config(args: &RunArgs, threads: Option<usize>) -> Result<StudyConfig, Failure> {
    let mut config = match (&args.config, args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
        }
        (None, Some(p)) => StudyConfig::from_preset(p),
        (None, None) => return Err(Failure::Validation("either --config or --preset is required".into())),
    };
    if let Some(f) = args.format {
        config.output.format = match f {
            Format::Csv => ReportFormat::Csv,
            Format::Md => ReportFormat::Md,
        };
    }
    if args.deterministic {
        config.deterministic = true;
    }
    if threads.is_some() {
        config.threads = threads;
    }
    config.validate()?;
    Ok(config)
}

fn init_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Validation("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| output_error(path, e))
}

fn run(args: &RunArgs, threads: Option<usize>) -> Result<(), Failure> {
    let config = load_config(args, threads)?;
    init_threads(config.threads)?;
    let out = &args.out;
    fs::create_dir_all(out).map_err(|e| output_error(out, e))?;
    write_file(&out.join("config.toml"), &config.render()?)?;

    let mut writer: Option<(usize, CheckpointWriter<BufWriter<File>>)> = None;
    let mut announced = None;
    let report = run_study_with(&config, |run, view| {
        if announced != Some(run) {
            announced = Some(run);
            eprintln!("{} = {}: solving", config.sweep.axis.label(), config.sweep.values[run]);
        }
        let Some(format) = config.output.checkpoint else {
            return Ok(());
        };
        if writer.as_ref().map(|(r, _)| *r) != Some(run) {
            if let Some((_, w)) = writer.take() {
                w.finish()?;
            }
            let ext = match format {
                CheckpointFormat::Csv => "csv",
                CheckpointFormat::Binary => "bin",
            };
            let path = out.join(format!("trajectory-{}.{ext}", config.sweep.values[run]));
            writer = Some((run, CheckpointWriter::new(BufWriter::new(File::create(path)?), format)?));
        }
        let (_, w) = writer.as_mut().expect("writer opened");
        w.write(view.index, view.energy, view.field)
    })?;
    if let Some((_, w)) = writer.take() {
        w.finish()?;
    }

    let (table, name) = match config.output.format {
        ReportFormat::Csv => (report.to_csv(), "report.csv"),
        ReportFormat::Md => (report.to_markdown(), "report.md"),
    };
    write_file(&out.join(name), &table)?;
    write_file(&out.join("metadata.toml"), &report.metadata(&config)?)?;
    print!("{table}");
    match &report.failure {
        None => Ok(()),
        Some(f) => Err(Failure::Runtime(format!("run {} failed: {}", f.knob, f.message))),
    }
}

fn check(threads: Option<usize>) -> Result<(), Failure> {
    init_threads(threads)?;
    let outcomes = pnfem::diagnostics::run_checks()?;
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} checks failed", outcomes.len())));
    }
    Ok(())
}

fn dump_operators(order: i64, out: Option<&Path>) -> Result<(), Failure> {
    let basis = SphericalBasis::new(order)?;
    let ops = AngularOperators::new(&basis)?;
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(|e| output_error(path, e))?);
            ops.write_csv(&mut w)?;
            w.flush().map_err(|e| output_error(path, e))?;
        }
        None => ops.write_csv(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => run(args, cli.threads),
        Command::Check => check(cli.threads),
        Command::DumpOperators { order, out } => dump_operators(*order, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Validation(msg) | Failure::Runtime(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
