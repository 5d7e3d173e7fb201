//! Command-line front end: `coefficients`, `cluster`, `backtest`, `report`.
//!
//! Settings come from an optional TOML file (`--config`) overridden by flags.
//! Data goes to files and stdout, diagnostics to stderr. Exit status is 0 on
//! success, 1 on runtime or data errors and 2 on usage or configuration
//! errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::backtest::{fit_panel, metrics_report, run_online_backtest, BacktestConfig, Benchmark};
use crate::error::Error;
use crate::export;
use crate::frontier::monthly_coefficients;
use crate::ingest::{group_by_month, load_price_panel, load_recession_labels, load_risk_free, returns_with_risk_free, ReturnPanel};
use crate::month::MonthKey;
use crate::regime::Linkage;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "markov-markowitz", version, about = "Markov-state portfolio allocation from efficient-frontier regimes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monthly efficient-frontier coefficients.
    Coefficients(RunArgs),
    /// States, dendrogram, transition matrix and steady state.
    Cluster(ClusterArgs),
    /// Online expanding-window backtest with benchmarks.
    Backtest(RunArgs),
    /// Recompute and print metrics from a stored daily_returns.csv.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub rf: Option<PathBuf>,
    #[arg(long)]
    pub recession: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Name of the date column in the price file.
    #[arg(long, default_value = "date")]
    pub date_column: String,
    #[arg(long)]
    pub k: Option<usize>,
    /// First out-of-sample month, YYYY-MM.
    #[arg(long)]
    pub test_start: Option<MonthKey>,
    #[arg(long)]
    pub gross_cap: Option<f64>,
    #[arg(long)]
    pub fee_rate: Option<f64>,
    #[arg(long)]
    pub linkage: Option<Linkage>,
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated: tangency, equal_weight, or a price column to buy and hold.
    #[arg(long, value_delimiter = ',')]
    pub benchmarks: Option<Vec<Benchmark>>,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Fit only on months before --test-start.
    #[arg(long)]
    pub train_only: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory holding daily_returns.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Also rewrite the metrics section of metrics.json.
    #[arg(long)]
    pub write: bool,
}

/// The config file layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub prices: Option<PathBuf>,
    pub rf: Option<PathBuf>,
    pub recession: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: BacktestConfig,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub prices: PathBuf,
    pub rf: PathBuf,
    pub recession: Option<PathBuf>,
    pub out: PathBuf,
    pub date_column: String,
    pub model: BacktestConfig,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

fn is_usage(e: &Error) -> bool {
    match e {
        Error::Argument(_) => true,
        Error::InMonth { source, .. } => is_usage(source),
        _ => false,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if is_usage(&e) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e)
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn require_existing(path: &Path, what: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} file not found: {}", path.display())))
    }
}

impl RunArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let file = match &self.config {
            Some(path) => {
                require_existing(path, "config")?;
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                toml::from_str::<RunConfigFile>(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            }
            None => RunConfigFile::default(),
        };
        let mut model = file.model;
        if let Some(k) = self.k {
            model.k = k;
        }
        if let Some(t) = self.test_start {
            model.test_start = t;
        }
        if let Some(g) = self.gross_cap {
            model.gross_cap = g;
        }
        if let Some(f) = self.fee_rate {
            model.fee_rate = f;
        }
        if let Some(l) = self.linkage {
            model.linkage = l;
        }
        if self.no_standardize {
            model.standardize = false;
        }
        if let Some(s) = self.seed {
            model.seed = s;
        }
        if let Some(b) = &self.benchmarks {
            model.benchmarks = b.clone();
        }
        model.validate()?;

        let prices = self
            .prices
            .clone()
            .or(file.prices)
            .ok_or_else(|| CliError::Usage("--prices is required".into()))?;
        let rf = self
            .rf
            .clone()
            .or(file.rf)
            .ok_or_else(|| CliError::Usage("--rf is required".into()))?;
        let recession = self.recession.clone().or(file.recession);
        let out = self.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("."));
        require_existing(&prices, "prices")?;
        require_existing(&rf, "risk-free")?;
        if let Some(r) = &recession {
            require_existing(r, "recession")?;
        }
        Ok(RunConfig {
            prices,
            rf,
            recession,
            out,
            date_column: self.date_column.clone(),
            model,
        })
    }
}

impl RunConfig {
    pub fn load_returns(&self) -> CliResult<ReturnPanel> {
        let prices = load_price_panel(&self.prices, &self.date_column)?;
        let rf = load_risk_free(&self.rf)?;
        Ok(returns_with_risk_free(&prices, &rf)?)
    }

    fn ensure_out(&self) -> CliResult<()> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::Runtime(Error::io(&self.out, e)))
    }
}

/// Write into a private staging directory, then move every file into `out`.
/// Nothing is left behind in `out` if any step fails.
fn staged<F>(out: &Path, write: F) -> CliResult<Vec<PathBuf>>
where
    F: FnOnce(&Path) -> crate::Result<()>,
{
    let stage = out.join(format!(".staging-{}", std::process::id()));
    let _ = fs::remove_dir_all(&stage);
    fs::create_dir_all(&stage).map_err(|e| CliError::Runtime(Error::io(&stage, e)))?;
    let result = write(&stage).and_then(|_| {
        let mut names: Vec<PathBuf> = fs::read_dir(&stage)
            .map_err(|e| Error::io(&stage, e))?
            .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(&stage, e)))
            .collect::<crate::Result<_>>()?;
        names.sort();
        let mut moved = Vec::with_capacity(names.len());
        for src in names {
            let dst = out.join(src.file_name().expect("file in staging dir"));
            if let Err(e) = fs::rename(&src, &dst) {
                for p in &moved {
                    let _ = fs::remove_file(p);
                }
                return Err(Error::io(&dst, e));
            }
            moved.push(dst);
        }
        Ok(moved)
    });
    let _ = fs::remove_dir_all(&stage);
    Ok(result?)
}

pub fn cmd_coefficients(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let panel = cfg.load_returns()?;
    let slices = group_by_month(&panel)?;
    let series = monthly_coefficients(&panel, &slices, cfg.model.ridge)?;
    cfg.ensure_out()?;
    let written = staged(&cfg.out, |dir| export::write_coefficients(&dir.join(export::COEFFICIENTS_FILE), &series))?;
    println!("{} rows -> {}", series.len(), written[0].display());
    Ok(written)
}

pub fn cmd_cluster(cfg: &RunConfig, train_only: bool) -> CliResult<Vec<PathBuf>> {
    let panel = cfg.load_returns()?;
    let recession = cfg.recession.as_ref().map(load_recession_labels).transpose()?;
    let n_months = if train_only {
        let slices = group_by_month(&panel)?;
        let n = slices.months.iter().take_while(|m| **m < cfg.model.test_start).count();
        if n == 0 {
            return Err(CliError::Usage(format!("no months before test start {}", cfg.model.test_start)));
        }
        Some(n)
    } else {
        None
    };
    let (_, _, fit) = fit_panel(&panel, &cfg.model, n_months)?;
    cfg.ensure_out()?;
    let pi = match &fit.steady_state {
        Some(s) => s.pi.clone(),
        None => match crate::markov::steady_state(&fit.transition) {
            Err(Error::ReducibleChain { last_iterate, .. }) => {
                log::warn!("transition matrix is reducible or periodic; steady_state.csv holds the last iterate");
                last_iterate
            }
            other => other?.pi,
        },
    };
    let written = staged(&cfg.out, |dir| {
        export::write_states(&dir.join(export::STATES_FILE), fit.states(), recession.as_ref())?;
        export::write_dendrogram(&dir.join(export::DENDROGRAM_FILE), &fit.regime.dendrogram)?;
        export::write_dendrogram_tree(&dir.join(export::DENDROGRAM_TREE_FILE), &fit.regime.dendrogram)?;
        export::write_transition_matrix(&dir.join(export::TRANSITION_FILE), &fit.transition)?;
        export::write_steady_state(&dir.join(export::STEADY_STATE_FILE), &pi)?;
        export::write_state_weights(&dir.join(export::STATE_WEIGHTS_FILE), &fit.state_weights, &panel.tickers)
    })?;
    let states = fit.states();
    println!("{} months, {} states -> {}", states.len(), states.k, cfg.out.display());
    Ok(written)
}

pub fn cmd_backtest(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let panel = cfg.load_returns()?;
    let result = run_online_backtest(&panel, &cfg.model)?;
    cfg.ensure_out()?;
    let written = staged(&cfg.out, |dir| export::export_backtest(dir, &result).map(|_| ()))?;
    print!("{}", export::render_metrics(&result.metrics));
    Ok(written)
}

pub fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let path = args.out.join(export::DAILY_RETURNS_FILE);
    require_existing(&path, "daily returns")?;
    let stored = export::read_daily_returns(&path)?;
    let report = metrics_report(&stored.series, &stored.rf)?;
    print!("{}", export::render_metrics(&report));
    if args.write {
        let metrics_path = args.out.join(export::METRICS_FILE);
        require_existing(&metrics_path, "metrics")?;
        let mut file = export::read_metrics(&metrics_path)?;
        file.metrics = report;
        export::write_metrics(&metrics_path, &file)?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Coefficients(a) => cmd_coefficients(&a.resolve()?).map(|_| ()),
        Command::Cluster(a) => cmd_cluster(&a.run.resolve()?, a.train_only).map(|_| ()),
        Command::Backtest(a) => cmd_backtest(&a.resolve()?).map(|_| ()),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parse `args`, run, report any failure on stderr, return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
