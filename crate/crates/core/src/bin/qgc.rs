use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qgc::data::{load_csv, Dataset, LabelColumn};
use qgc::dynamics::{ConvergenceConfig, LrrKind};
use qgc::game::{PayoffKind, StrategyCase};
use qgc::pipeline::{cluster, prepare, simulate, sweep, RunConfig};

#[derive(Parser)]
#[command(name = "qgc", version, about = "Clustering with entangled quantum games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and print a JSON report.
    Cluster {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Include wall-clock time in the report (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of configurations and print a CSV table.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        /// k values: a list `4,6,8` or an inclusive range `4..20`.
        #[arg(long, default_value = "4..20")]
        k: String,
        /// Strategy cases to try.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        case: Vec<CaseArg>,
        #[arg(long, value_delimiter = ',', default_value = "pd,sd")]
        payoff: Vec<PayoffArg>,
        /// Snowdrift cost factors (only used with `sd`).
        #[arg(long, value_delimiter = ',', default_value = "0.2")]
        beta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "l1,l2")]
        lrr: Vec<LrrArg>,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one configuration and print one JSON line per iteration.
    Trace {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// CSV file, one point per row.
    #[arg(long)]
    dataset: PathBuf,
    /// Column holding class labels: an index, `last`, or `none`.
    #[arg(long, default_value = "last")]
    label_column: String,
    /// The first row is data, not a header.
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_enum, default_value = "1")]
    case: CaseArg,
    #[arg(long, value_enum, default_value = "pd")]
    payoff: PayoffArg,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long, value_enum, default_value = "l1")]
    lrr: LrrArg,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Cluster count to merge down to (default: number of classes).
    #[arg(long)]
    clusters: Option<usize>,
    /// Seed for missing-value imputation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Compare each total payoff with the one this many steps back (2 tolerates the strength cycle).
    #[arg(long, default_value_t = 1)]
    lag: usize,
    /// Scale every feature to zero mean and unit variance first.
    #[arg(long)]
    standardize: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Clone, Copy, ValueEnum)]
enum PayoffArg {
    Pd,
    Sd,
}

#[derive(Clone, Copy, ValueEnum)]
enum LrrArg {
    L1,
    L2,
}

impl From<CaseArg> for StrategyCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::One => StrategyCase::Case1,
            CaseArg::Two => StrategyCase::Case2,
        }
    }
}

impl From<PayoffArg> for PayoffKind {
    fn from(p: PayoffArg) -> Self {
        match p {
            PayoffArg::Pd => PayoffKind::Pd,
            PayoffArg::Sd => PayoffKind::Sd,
        }
    }
}

impl From<LrrArg> for LrrKind {
    fn from(l: LrrArg) -> Self {
        match l {
            LrrArg::L1 => LrrKind::L1,
            LrrArg::L2 => LrrKind::L2,
        }
    }
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<qgc::Error> for Failure {
    fn from(e: qgc::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn load(input: &InputArgs) -> Result<Dataset, Failure> {
    let label = match input.label_column.as_str() {
        "last" => Some(LabelColumn::Last),
        "none" => None,
        s => Some(LabelColumn::Index(s.parse().map_err(|_| {
            Failure::Usage(format!("--label-column expects an index, `last` or `none`, got `{s}`"))
        })?)),
    };
    Ok(load_csv(&input.dataset, !input.no_header, label)?)
}

fn config(c: &CommonArgs, k: usize, case: CaseArg, payoff: PayoffArg, beta: f64, lrr: LrrArg) -> Result<RunConfig, Failure> {
    Ok(RunConfig {
        k,
        case: case.into(),
        payoff: payoff.into(),
        beta,
        lrr: lrr.into(),
        sigma: c.sigma,
        convergence: ConvergenceConfig::new(c.max_iters, c.eps, c.window)?.with_lag(c.lag)?,
        seed: c.seed,
        clusters: c.clusters,
        standardize: c.standardize,
    })
}

fn run_config(r: &RunArgs) -> Result<RunConfig, Failure> {
    config(&r.common, r.k, r.case, r.payoff, r.beta, r.lrr)
}

fn parse_k_list(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("--k expects `a..b` or a comma list, got `{s}`"));
    let ks: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if ks.is_empty() {
        return Err(Failure::Usage(format!("--k `{s}` selects no values")));
    }
    Ok(ks)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Cluster { input, run, timing, out } => {
            let ds = load(&input)?;
            let cfg = run_config(&run)?;
            let start = Instant::now();
            let mut report = cluster(&ds, &cfg)?;
            if timing {
                report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            let mut w = sink(&out)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Sweep { input, k, case, payoff, beta, lrr, common, out } => {
            let ds = load(&input)?;
            let ks = parse_k_list(&k)?;
            if case.is_empty() || payoff.is_empty() || beta.is_empty() || lrr.is_empty() {
                return Err(Failure::Usage("every sweep axis needs at least one value".into()));
            }
            let mut configs = Vec::new();
            for &c in &case {
                for &p in &payoff {
                    // beta only matters for snowdrift
                    let betas: &[f64] = if matches!(p, PayoffArg::Sd) { &beta } else { &beta[..1] };
                    for &b in betas {
                        for &l in &lrr {
                            for &kk in &ks {
                                configs.push(config(&common, kk, c, p, b, l)?);
                            }
                        }
                    }
                }
            }
            let rows = sweep(&ds, &configs)?;
            let mut w = csv::Writer::from_writer(sink(&out)?);
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Command::Trace { input, run, out } => {
            let ds = load(&input)?;
            let cfg = run_config(&run)?;
            let prepared = prepare(&ds, &cfg)?;
            let mut w = sink(&out)?;
            let mut err: Option<io::Error> = None;
            simulate(&prepared, &cfg, |_, stats| {
                if err.is_none() {
                    let line = serde_json::to_string(stats).expect("step stats serialise");
                    if let Err(e) = writeln!(w, "{line}") {
                        err = Some(e);
                    }
                }
            })?;
            if let Some(e) = err {
                return Err(e.into());
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
