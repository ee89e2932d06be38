use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hullstate::bench::{self, Format, GnSettings, Method, NoiseOverride, Report, Scenario};
use hullstate::cases;

#[derive(Parser)]
#[command(
    name = "hullstate",
    version,
    about = "WLS and interval state estimation benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark scenario and write its report.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Wls,
    Interval,
    Compare,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Network document (JSON).
    #[arg(long, required_unless_present = "case", requires = "placement")]
    net: Option<PathBuf>,
    /// Placement document (JSON).
    #[arg(long, requires = "net")]
    placement: Option<PathBuf>,
    /// Bundled case instead of --net/--placement.
    #[arg(long, conflicts_with_all = ["net", "placement"])]
    case: Option<String>,
    #[arg(long, value_enum, default_value = "compare")]
    method: MethodArg,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// SCADA maximum-error rate; 0 disables SCADA noise.
    #[arg(long)]
    noise_scada: Option<f64>,
    /// Pseudo-measurement maximum-error rate; 0 disables pseudo noise.
    #[arg(long)]
    noise_pseudo: Option<f64>,
    #[arg(long)]
    load_scale: Option<f64>,
    /// Gauss-Newton stop threshold on the state update (infinity norm).
    #[arg(long, default_value_t = hullstate::wls::DEFAULT_WLS_TOL)]
    wls_tol: f64,
    #[arg(long, default_value_t = hullstate::wls::DEFAULT_WLS_MAX_ITER)]
    wls_max_iter: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

fn scenario(args: &RunArgs) -> hullstate::Result<Scenario> {
    let base = match (&args.case, &args.net, &args.placement) {
        (Some(name), _, _) => {
            let case = cases::ALL.iter().find(|c| c.name == name).ok_or_else(|| {
                bench::BenchError::InvalidScenario(format!("unknown bundled case {name:?}"))
            })?;
            Scenario::bundled(*case)
        }
        (None, Some(net), Some(placement)) => Scenario::from_files(net, placement)?,
        _ => unreachable!("clap enforces --net with --placement or --case"),
    };
    let method = match args.method {
        MethodArg::Wls => Method::Wls,
        MethodArg::Interval => Method::Interval,
        MethodArg::Compare => Method::Compare,
    };
    Ok(base
        .with_method(method)
        .with_trials(args.trials)
        .with_seed(args.seed)
        .with_load_scale(args.load_scale)
        .with_noise(NoiseOverride {
            scada: args.noise_scada,
            pseudo: args.noise_pseudo,
        })
        .with_gn(GnSettings {
            tol: args.wls_tol,
            max_iter: args.wls_max_iter,
        }))
}

fn summary(rep: &Report) {
    for r in rep.method_reports() {
        eprintln!(
            "{:<8} MAE real {:.3e} imag {:.3e}  median {:.3} ms over {} runs",
            r.method.as_str(),
            r.mae.real,
            r.mae.imag,
            r.timing.median_seconds * 1e3,
            r.timing.repeats
        );
    }
    if let Report::Comparison(c) = rep {
        eprintln!(
            "ratio interval / mean WLS trial = {:.3} ({:.3} ms / {:.3} ms)",
            c.ratio,
            c.interval_seconds * 1e3,
            c.mean_wls_trial_seconds * 1e3
        );
    }
}

fn run(args: RunArgs) -> hullstate::Result<()> {
    let sc = scenario(&args)?;
    let rep = bench::run(&sc)?;
    summary(&rep);
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    match &args.out {
        Some(path) => bench::emit_report(&rep, format, path)?,
        None => match format {
            Format::Csv => print!("{}", rep.to_csv()?),
            Format::Json => println!("{}", rep.to_json()?),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
