use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qamg_core::amplification::{Label, Prob};
use qamg_core::harness::{
    atomic_write, emit_tables, exit_code, generate_instance, run_batch, ExperimentConfig, GenParams, Kind, Mode,
    Protocol, Report, EXIT_CHECKS_FAILED, EXIT_OK,
};
use qamg_core::{Error, Result};

#[derive(Parser)]
#[command(name = "qamg", version, about = "Generate and run quantum Arthur-Merlin game experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded instance file.
    Gen(GenArgs),
    /// Run experiments and write JSON reports.
    Run(RunArgs),
    /// Collect a directory of reports into one CSV table.
    Table(TableArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelArg {
    Yes,
    No,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: Kind,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Coin bits for two-message games.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    gates: Option<usize>,
    /// Top eigenvalue for qma-p, e.g. `3/4`.
    #[arg(long)]
    target: Option<Prob>,
    /// Two eigenvalues for qma-dyadic, e.g. `3/4,1/4`.
    #[arg(long, value_parser = parse_pair)]
    spectrum: Option<(Prob, Prob)>,
    #[arg(long)]
    error: Option<Prob>,
    #[arg(long)]
    epsilon: Option<Prob>,
    #[arg(long)]
    label: Option<LabelArg>,
    #[arg(long)]
    a: Option<Prob>,
    #[arg(long)]
    b: Option<Prob>,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file; repeat to run a batch in parallel.
    #[arg(long, required = true)]
    instance: Vec<PathBuf>,
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    protocol: Option<Protocol>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    copies: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report file, or a directory when several instances are given.
    /// Without it the report is printed.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, overrides_with = "float")]
    exact: bool,
    #[arg(long, overrides_with = "exact")]
    float: bool,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<(Prob, Prob), Error> {
    let (p0, p1) = s
        .split_once(',')
        .ok_or_else(|| Error::Config(format!("expected `p0,p1`, got `{s}`")))?;
    Ok((p0.trim().parse()?, p1.trim().parse()?))
}

fn gen(args: GenArgs) -> Result<i32> {
    let params = GenParams {
        m: args.m,
        k: args.k,
        s: args.s,
        gates: args.gates,
        target: args.target,
        spectrum: args.spectrum,
        error: args.error,
        epsilon: args.epsilon,
        label: args.label.map(|l| match l {
            LabelArg::Yes => Label::Yes,
            LabelArg::No => Label::No,
        }),
        a: args.a,
        b: args.b,
    };
    generate_instance(args.kind, args.seed, &params)?.save(&args.out)?;
    Ok(EXIT_OK)
}

fn report_path(out: &Path, instance: &Path) -> PathBuf {
    let stem = instance.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
    out.join(format!("{stem}.report.json"))
}

fn run(args: RunArgs) -> Result<i32> {
    let batch = args.instance.len() > 1;
    if batch {
        if let Some(dir) = &args.out {
            std::fs::create_dir_all(dir)?;
        }
    }
    let cfgs: Vec<ExperimentConfig> = args
        .instance
        .iter()
        .map(|path| ExperimentConfig {
            protocol: args.protocol,
            reps: args.reps,
            copies: args.copies,
            restarts: args.restarts,
            samples: args.samples,
            seed: args.seed,
            output: args.out.as_ref().map(|o| if batch { report_path(o, path) } else { o.clone() }),
            exact: args.exact,
            ..ExperimentConfig::new(path, args.mode)
        })
        .collect();
    let mut status = EXIT_OK;
    for (cfg, result) in cfgs.iter().zip(run_batch(&cfgs)) {
        let report = match result {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{}: {e}", cfg.instance.display());
                status = status.max(exit_code(&e));
                continue;
            }
        };
        if cfg.output.is_none() {
            print!("{}", report.to_json()?);
        } else {
            println!(
                "{} {} {}: {}/{} checks passed ({:.3} s)",
                report.instance,
                report.protocol,
                report.mode,
                report.checks.len() - report.failed_checks().len(),
                report.checks.len(),
                report.wall_clock_s
            );
        }
        for c in report.failed_checks() {
            eprintln!(
                "{}: check {} failed: {} vs {} ({:?}, tol {})",
                report.instance, c.name, c.value, c.reference, c.relation, c.tolerance
            );
        }
        if !report.passed {
            status = status.max(EXIT_CHECKS_FAILED);
        }
    }
    Ok(status)
}

fn table(args: TableArgs) -> Result<i32> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.input)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    paths.sort();
    let reports = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<Report>(&text)
                .map_err(|e| Error::Instance(format!("{} is not a report: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    atomic_write(&args.out, emit_tables(&reports)?.as_bytes())?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Table(a) => table(a),
    };
    let code = outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    });
    ExitCode::from(code as u8)
}
