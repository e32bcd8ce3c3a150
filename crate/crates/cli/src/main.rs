//! `srb`: command-line front end for the SRB-entropy toolkit.

mod commands;
mod config;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::ValidationFailure;
use crate::config::{ConfigError, RunConfig};

/// Environment variable capping the number of worker threads.
const THREADS_VAR: &str = "SRB_THREADS";

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

/// A configured command, run after the configuration is resolved.
type Job = Box<dyn Fn(&RunConfig) -> anyhow::Result<()>>;

#[derive(Parser, Debug)]
#[command(
    name = "srb",
    version,
    about = "SRB entropy of convex projective geodesic flows"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the algebraic-identity suite.
    Validate(RunArgs),
    /// Conjugacy-class census with spectral data (CSV).
    Census(RunArgs),
    /// Build and export the limit domain.
    Domain(RunArgs),
    /// Lyapunov spectrum along a single orbit (JSON).
    Orbit {
        #[command(flatten)]
        run: RunArgs,
        /// Use the invariant conic instead of the limit domain (hyperbolic point only).
        #[arg(long)]
        conic: bool,
        /// Also run the Euclidean-speed reparametrization.
        #[arg(long)]
        abramov: bool,
    },
    /// Entropy reports along a tau-grid (CSV plus JSON mirror).
    Sweep(RunArgs),
    /// Topological entropy by counting closed geodesics (JSON).
    Count(RunArgs),
    /// Summarize a report file.
    Explain {
        /// Report CSV (or JSON mirror).
        report: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    r: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Comma-separated tau-grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    taus: Option<Vec<f64>>,
    /// Rotation length of the limit-set word ball.
    #[arg(long = "L")]
    rotation_length: Option<usize>,
    /// Rotation length of the counting census.
    #[arg(long = "count-L")]
    count_length: Option<usize>,
    /// Measured flow time per orbit.
    #[arg(long = "T")]
    t_total: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long)]
    batch_length: Option<f64>,
    #[arg(long)]
    n_orbits: Option<usize>,
    /// Orbit index for `orbit`.
    #[arg(long)]
    index: Option<u64>,
    /// Trace stride for `orbit` (0 disables).
    #[arg(long)]
    trace_stride: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    /// Load the file (if any) and apply flag overrides.
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
                    key: "--config".into(),
                    reason: format!("cannot read {}: {e}", path.display()),
                })?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $($field:tt)+) => {
                if let Some(v) = $flag.clone() {
                    c.$($field)+ = v;
                }
            };
        }
        set!(self.p => family.p);
        set!(self.q => family.q);
        set!(self.r => family.r);
        set!(self.tau => family.tau);
        set!(self.taus => family.taus);
        set!(self.rotation_length => domain.rotation_length);
        set!(self.t_total => cocycle.t_total);
        set!(self.eps => cocycle.eps);
        set!(self.delta => cocycle.delta);
        set!(self.burn_in => cocycle.burn_in);
        set!(self.batch_length => cocycle.batch_length);
        set!(self.n_orbits => orbits.n_orbits);
        set!(self.index => orbits.index);
        set!(self.trace_stride => orbits.trace_stride);
        set!(self.seed => seed);
        if self.count_length.is_some() {
            c.domain.count_length = self.count_length;
        }
        if self.radius.is_some() {
            c.cocycle.radius = self.radius;
        }
        if self.output.is_some() {
            c.output = self.output.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.parse().map_err(|_| ConfigError {
            key: THREADS_VAR.into(),
            reason: format!("`{v}` is not a thread count"),
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    let (args, job): (&RunArgs, Job) = match &cli.command {
        Command::Explain { report } => return commands::explain(report),
        Command::Validate(a) => (a, Box::new(commands::validate)),
        Command::Census(a) => (a, Box::new(commands::census)),
        Command::Domain(a) => (a, Box::new(commands::domain)),
        Command::Orbit {
            run,
            conic,
            abramov,
        } => {
            let (conic, abramov) = (*conic, *abramov);
            (
                run,
                Box::new(move |c: &RunConfig| commands::orbit(c, conic, abramov)),
            )
        }
        Command::Sweep(a) => (a, Box::new(commands::sweep)),
        Command::Count(a) => (a, Box::new(commands::count)),
    };
    let cfg = args.resolve()?;
    if args.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    job(&cfg)
}

/// Map an error to its exit status and the name printed with it.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    if err.downcast_ref::<ConfigError>().is_some() {
        return (EXIT_USAGE, "usage");
    }
    if err.downcast_ref::<ValidationFailure>().is_some() {
        return (EXIT_VALIDATION, "validation");
    }
    if let Some(e) = err.downcast_ref::<srb_core::Error>() {
        use srb_core::Error as E;
        let code = match e {
            E::InvalidConfig(_) | E::InvalidParameter(_) | E::NotHyperbolic { .. } => EXIT_USAGE,
            E::Format(_) => EXIT_VALIDATION,
            _ => EXIT_NUMERIC,
        };
        return (code, e.name());
    }
    (EXIT_NUMERIC, "io")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, name) = classify(&err);
            eprintln!("error[{name}]: {err:#}");
            ExitCode::from(code)
        }
    }
}
