//! Command-line frontend.
//!
//! Every command reads a wide CSV panel (see [`crate::panel`]), computes all
//! of its artifacts in memory, and only then writes them: first into a
//! temporary directory next to the destination, then renamed into place, so
//! a failing run never leaves a partial artifact set behind.
//!
//! Exit codes: 0 success, 2 invalid input or options, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::cca_factor::{self, FactorConfig, FactorModel, Regime, TestReport, DEFAULT_CHI2_MAX_DIM};
use crate::detrend::{self, Decomposition, OrderGrid, OrderSpec, DEFAULT_D_MAX};
use crate::dynamics::{self, Origin, PipelineConfig, RollingConfig, Variant};
use crate::error::{Error, Result};
use crate::numerics::DEFAULT_FLOOR_REL;
use crate::panel::{self, TimePanel};
use crate::simlab::{self, Cell, Experiment, SimConfig};

/// Environment variable holding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "STRUCTFACTOR_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "structfactor",
    version,
    about = "Structural factor modeling of multivariate time series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split each series into trend, seasonal and irregular parts.
    Decompose(DecomposeArgs),
    /// Extract common factors from the irregular part.
    Factors(FactorsArgs),
    /// Forecast the panel from its fitted structure.
    Forecast(ForecastArgs),
    /// Rolling out-of-sample forecast evaluation.
    Evaluate(EvaluateArgs),
    /// Monte Carlo experiments on synthetic panels.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Directory receiving the artifacts.
    #[arg(short, long, env = OUTPUT_DIR_ENV, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Wide CSV: time-label column, then one column per series.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Seasonal period s.
    #[arg(short = 's', long = "period")]
    pub period: usize,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    /// Largest number of harmonic pairs searched [default: ceil(s/2)-1].
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Largest trend degree searched.
    #[arg(long, default_value_t = DEFAULT_D_MAX)]
    pub d_max: usize,
    /// Fix the number of harmonic pairs instead of selecting it.
    #[arg(long)]
    pub k: Option<usize>,
    /// Fix the trend degree instead of selecting it.
    #[arg(long)]
    pub d: Option<usize>,
    /// BIC penalty constant C_T [default: log(log(T))].
    #[arg(long = "c-t")]
    pub c_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Auto,
    ChiSquare,
    Normal,
}

#[derive(Debug, Args)]
pub struct FactorArgs {
    /// Number of stacked lags in the canonical correlation analysis.
    #[arg(short, long, default_value_t = 2)]
    pub m: usize,
    /// Significance level of the sequential test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Reference distribution for the test.
    #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
    pub regime: RegimeArg,
    /// Largest p for which the auto regime uses chi-square p-values.
    #[arg(long, default_value_t = DEFAULT_CHI2_MAX_DIM)]
    pub chi2_max_dim: usize,
    /// Fix the number of factors instead of testing for it.
    #[arg(short, long)]
    pub r: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub order: OrderArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FactorsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// The input is already an irregular (detrended) panel.
    #[arg(long)]
    pub detrended: bool,
    #[command(flatten)]
    pub order: OrderArgs,
    #[command(flatten)]
    pub factor: FactorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub order: OrderArgs,
    #[command(flatten)]
    pub factor: FactorArgs,
    /// Model variant.
    #[arg(long, value_enum, default_value_t = Variant::Gt2)]
    pub variant: Variant,
    /// VAR order for the factors (or for the panel with VEC).
    #[arg(long, default_value_t = 1)]
    pub var_order: usize,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of steps ahead.
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Forecast horizon h.
    #[arg(long = "h", default_value_t = 1)]
    pub h: usize,
    /// First training length tau0.
    #[arg(long, conflicts_with = "train_fraction")]
    pub origin: Option<usize>,
    /// First training length as a fraction of T.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Grid cell as key=value pairs (p, T, r, k0, d0, s, k_known, r_known);
    /// repeat for several cells.
    #[arg(long = "cell", required = true)]
    pub cells: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(short, long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
    pub regime: RegimeArg,
    #[arg(long, default_value_t = DEFAULT_CHI2_MAX_DIM)]
    pub chi2_max_dim: usize,
    /// Also write every replication's values to samples.csv.
    #[arg(long)]
    pub samples: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Named file contents produced by one command.
pub type Artifacts = Vec<(String, Vec<u8>)>;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

impl OrderArgs {
    fn validate(&self) -> Result<()> {
        if let Some(c) = self.c_t {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid(format!("--c-t must be positive, got {c}")));
            }
        }
        Ok(())
    }

    fn grid(&self, s: usize) -> OrderGrid {
        let mut grid = OrderGrid::new(self.k_max.unwrap_or_else(|| detrend::max_harmonics(s)), self.d_max);
        if let Some(k) = self.k {
            grid.k_min = k;
            grid.k_max = k;
        }
        if let Some(d) = self.d {
            grid.d_min = d;
            grid.d_max = d;
        }
        grid
    }

    /// The fixed order when both `k` and `d` are given.
    fn fixed(&self, s: usize) -> Option<OrderSpec> {
        match (self.k, self.d) {
            (Some(k), Some(d)) => Some(OrderSpec::new(d, k, s)),
            _ => None,
        }
    }
}

impl FactorArgs {
    fn config(&self) -> Result<FactorConfig> {
        factor_config(self.m, self.alpha, self.regime, self.chi2_max_dim)
    }
}

fn factor_config(m: usize, alpha: f64, regime: RegimeArg, max_dim: usize) -> Result<FactorConfig> {
    if m < 1 {
        return Err(invalid("-m must be at least 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("--alpha must be in (0, 1), got {alpha}")));
    }
    let regime = match regime {
        RegimeArg::Auto => Regime::Auto { max_dim },
        RegimeArg::ChiSquare => Regime::ChiSquare,
        RegimeArg::Normal => Regime::Normal,
    };
    Ok(FactorConfig {
        m,
        alpha,
        regime,
        floor_rel: DEFAULT_FLOOR_REL,
    })
}

fn read_panel(input: &InputArgs) -> Result<TimePanel> {
    if input.period < 2 {
        return Err(invalid(format!("--period must be at least 2, got {}", input.period)));
    }
    panel::read_csv(&input.input, input.period)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// `rows x T` series matrix as a wide CSV sharing the panel's time labels.
fn series_csv(like: &TimePanel, names: &[String], m: &DMatrix<f64>) -> String {
    panel::matrix_to_csv(like.label_header(), like.time_labels(), names, &m.transpose())
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn decompose_panel(panel: &TimePanel, order: &OrderArgs) -> Result<(Decomposition, Option<detrend::BicTable>)> {
    let s = panel.periodicity();
    if let Some(fixed) = order.fixed(s) {
        return Ok((detrend::fit(panel, fixed)?, None));
    }
    let table = detrend::select_orders(panel, order.grid(s), order.c_t)?;
    let dec = detrend::fit(panel, table.selected_order(s))?;
    Ok((dec, Some(table)))
}

pub fn cmd_decompose(args: &DecomposeArgs) -> Result<Artifacts> {
    args.order.validate()?;
    let panel = read_panel(&args.input)?;
    let s = panel.periodicity();
    // The BIC report is always produced, so a fixed order is scored as a
    // one-cell grid.
    let table = detrend::select_orders(&panel, args.order.grid(s), args.order.c_t)?;
    let dec = detrend::fit(&panel, table.selected_order(s))?;
    let (trend, seasonal, irregular) = dec.component_panels(&panel)?;
    let theta = panel::matrix_to_csv("series", panel.series_names(), &dec.coefficient_names(), &dec.theta);
    Ok(vec![
        ("trend.csv".into(), trend.to_csv_string().into_bytes()),
        ("seasonal.csv".into(), seasonal.to_csv_string().into_bytes()),
        ("irregular.csv".into(), irregular.to_csv_string().into_bytes()),
        ("theta.csv".into(), theta.into_bytes()),
        (
            "bic_report.json".into(),
            json_bytes(&table.report(panel.series_names()))?,
        ),
    ])
}

fn factor_artifacts(panel: &TimePanel, model: &FactorModel, report: &TestReport) -> Result<Artifacts> {
    let p = model.n_series();
    let names = panel.series_names();
    let loadings = panel::matrix_to_csv("series", names, &numbered("L", p), &model.loadings);
    let whitener = panel::matrix_to_csv("series", names, names, &model.whitener);
    let factors = series_csv(panel, &numbered("f", model.r), &model.factors);
    let noise = series_csv(panel, &numbered("e", p - model.r), &model.noise_variates);
    Ok(vec![
        ("loadings.csv".into(), loadings.into_bytes()),
        ("whitener.csv".into(), whitener.into_bytes()),
        ("factors.csv".into(), factors.into_bytes()),
        ("noise_variates.csv".into(), noise.into_bytes()),
        ("test_report.json".into(), json_bytes(report)?),
    ])
}

pub fn cmd_factors(args: &FactorsArgs) -> Result<Artifacts> {
    args.order.validate()?;
    let config = args.factor.config()?;
    let panel = read_panel(&args.input)?;
    let irregular = if args.detrended {
        panel.values().clone()
    } else {
        decompose_panel(&panel, &args.order)?.0.irregular
    };
    let (model, report) = cca_factor::analyze(&irregular, &config, args.factor.r)?;
    factor_artifacts(&panel, &model, &report)
}

impl ModelArgs {
    fn pipeline(&self, s: usize) -> Result<PipelineConfig> {
        self.order.validate()?;
        if self.var_order < 1 {
            return Err(invalid("--var-order must be at least 1"));
        }
        Ok(PipelineConfig {
            variant: self.variant,
            order: self.order.fixed(s),
            grid: Some(self.order.grid(s)),
            c_t: self.order.c_t,
            factor: self.factor.config()?,
            r: self.factor.r,
            var_order: self.var_order,
        })
    }
}

pub fn cmd_forecast(args: &ForecastArgs) -> Result<Artifacts> {
    if args.horizon < 1 {
        return Err(invalid("--horizon must be at least 1"));
    }
    let pipeline = args.model.pipeline(args.input.period)?;
    let panel = read_panel(&args.input)?;
    let fitted = dynamics::fit_pipeline(&panel, &pipeline)?;
    let fc = fitted.forecast(args.horizon)?;
    if fitted.var.stationarity_warning {
        eprintln!(
            "warning: fitted VAR is not stationary (spectral radius {:.6})",
            fitted.var.spectral_radius
        );
    }
    Ok(vec![(
        "forecast.csv".into(),
        fc.to_csv(panel.series_names()).into_bytes(),
    )])
}

/// The rolling configuration `evaluate` runs, exposed so library callers
/// can reproduce it exactly.
pub fn rolling_config(args: &EvaluateArgs) -> Result<RollingConfig> {
    if args.h < 1 {
        return Err(invalid("--h must be at least 1"));
    }
    let origin = match (args.origin, args.train_fraction) {
        (Some(i), _) => Origin::Index(i),
        (None, Some(f)) => Origin::Fraction(f),
        (None, None) => return Err(invalid("one of --origin or --train-fraction is required")),
    };
    Ok(RollingConfig {
        origin,
        h: args.h,
        pipeline: args.model.pipeline(args.input.period)?,
    })
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Artifacts> {
    let config = rolling_config(args)?;
    let panel = read_panel(&args.input)?;
    let report = dynamics::rolling_evaluate(&panel, &config)?;
    Ok(vec![("evaluation.json".into(), json_bytes(&report)?)])
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Artifacts> {
    let factor = factor_config(args.m, args.alpha, args.regime, args.chi2_max_dim)?;
    if args.reps < 1 {
        return Err(invalid("--reps must be at least 1"));
    }
    if args.workers == Some(0) {
        return Err(invalid("--workers must be at least 1"));
    }
    let cells = args
        .cells
        .iter()
        .map(|c| c.parse::<Cell>())
        .collect::<Result<Vec<_>>>()?;
    let config = SimConfig {
        experiment: args.experiment,
        cells,
        replications: args.reps,
        seed: args.seed,
        workers: args.workers,
        factor,
        keep_samples: args.samples,
    };
    let table = simlab::run_table(&config)?;
    if let Some(bad) = table.cells.iter().find(|c| c.failed) {
        return Err(Error::Domain(format!(
            "cell {}: {} of {} replications failed (first: {})",
            bad.label,
            bad.failures,
            table.replications,
            bad.first_error.as_deref().unwrap_or("unknown")
        )));
    }
    let mut out = vec![
        ("simulation.csv".into(), table.to_csv().into_bytes()),
        ("simulation.json".into(), json_bytes(&table)?),
    ];
    if let Some(samples) = table.samples_csv() {
        out.push(("samples.csv".into(), samples.into_bytes()));
    }
    Ok(out)
}

/// Write all artifacts into `dir` through a temporary sibling directory.
pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<()> {
    fs::create_dir_all(dir)?;
    let staging = tempfile::Builder::new().prefix(".structfactor-").tempdir_in(dir)?;
    for (name, bytes) in artifacts {
        fs::write(staging.path().join(name), bytes)?;
    }
    for (name, _) in artifacts {
        fs::rename(staging.path().join(name), dir.join(name))?;
    }
    Ok(())
}

fn exit_code(err: &Error) -> i32 {
    if err.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_USER
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let (artifacts, dir) = match &cli.command {
        Command::Decompose(a) => (cmd_decompose(a)?, &a.output.output_dir),
        Command::Factors(a) => (cmd_factors(a)?, &a.output.output_dir),
        Command::Forecast(a) => (cmd_forecast(a)?, &a.output.output_dir),
        Command::Evaluate(a) => (cmd_evaluate(a)?, &a.output.output_dir),
        Command::Simulate(a) => (cmd_simulate(a)?, &a.output.output_dir),
    };
    write_artifacts(dir, &artifacts)
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_families() {
        assert_eq!(exit_code(&Error::MissingFile("x".into())), EXIT_USER);
        assert_eq!(
            exit_code(&Error::Parse {
                row: 1,
                col: 2,
                msg: String::new()
            }),
            EXIT_USER
        );
        assert_eq!(exit_code(&Error::DegenerateSpectrum), EXIT_NUMERIC);
        let nested = Error::AtOrigin {
            origin: 4,
            source: Box::new(Error::RankDeficient {
                rank: 1,
                cols: 2,
                series: None,
            }),
        };
        assert_eq!(exit_code(&nested), EXIT_NUMERIC);
    }

    #[test]
    fn bad_options_rejected_before_reading() {
        // The input does not exist, so reaching the reader would report
        // MissingFile instead.
        let code_of = |args: &[&str]| {
            let cli = Cli::try_parse_from(args).unwrap();
            match execute(&cli) {
                Err(Error::InvalidArgument(_)) => "invalid",
                Err(Error::MissingFile(_)) => "missing",
                _ => "other",
            }
        };
        let base = ["structfactor", "forecast", "-i", "/nonexistent.csv", "-s", "12"];
        assert_eq!(code_of(&[&base[..], &["--horizon", "0"]].concat()), "invalid");
        assert_eq!(code_of(&[&base[..], &["--alpha", "1.5"]].concat()), "invalid");
        assert_eq!(code_of(&[&base[..], &["--var-order", "0"]].concat()), "invalid");
        assert_eq!(code_of(&base), "missing");
    }

    #[test]
    fn parse_failures_exit_2() {
        assert_eq!(run(["structfactor", "decompose"]), EXIT_USER);
        assert_eq!(run(["structfactor", "bogus"]), EXIT_USER);
        assert_eq!(
            run(["structfactor", "decompose", "-i", "x.csv", "-s", "abc"]),
            EXIT_USER
        );
    }

    #[test]
    fn grid_from_options() {
        let args = OrderArgs {
            k_max: None,
            d_max: 2,
            k: Some(3),
            d: None,
            c_t: None,
        };
        let g = args.grid(12);
        assert_eq!((g.k_min, g.k_max, g.d_min, g.d_max), (3, 3, 0, 2));
        assert_eq!(args.fixed(12), None);
        let g = OrderArgs { k: None, ..args }.grid(12);
        assert_eq!(g.k_max, 5);
    }
}
