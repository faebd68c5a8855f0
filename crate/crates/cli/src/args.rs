use std::path::PathBuf;

use advbound::data::{CsvOptions, DataSource, DatasetSpec, LabelColumn, Normalize, SIX_CLASS_MEANS};
use advbound::{LabeledPointCloud, Metric};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "advbound", version, about = "Lower bounds on multiclass adversarial risk")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the interaction complex and report counts per order.
    Complex(ComplexCmd),
    /// Solve once with the LP or Sinkhorn solver.
    Solve(SolveCmd),
    /// Solve over a grid of budgets and levels, writing CSV.
    Sweep(SweepCmd),
    /// Compare a truncated solve against the full one.
    Bound(BoundCmd),
    /// Write a built-in synthetic dataset as CSV.
    Synth(SynthCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Idx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Synthetic {
    /// Two concentric triangles, six classes of one point each.
    Triangle,
    /// Six Gaussian classes in the plane.
    Gaussian6,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    None,
    Unit,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Dataset file (CSV, or IDX images with --format idx).
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// Built-in synthetic dataset.
    #[arg(long, value_enum)]
    pub synthetic: Option<Synthetic>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// IDX label file.
    #[arg(long, required_if_eq("format", "idx"))]
    pub labels: Option<PathBuf>,
    /// CSV label column: index or header name. Defaults to the last column.
    #[arg(long)]
    pub label_column: Option<String>,
    /// The CSV has a header row.
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Comma-separated class names to keep.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// Keep at most this many points per class.
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Samples per class for --synthetic gaussian6.
    #[arg(long, default_value_t = 20)]
    pub samples_per_class: usize,
    /// Covariance scale for --synthetic gaussian6.
    #[arg(long, default_value_t = 1.0)]
    pub cov_scale: f64,
    #[arg(long, value_enum, default_value = "none")]
    pub normalize: NormalizeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl DataArgs {
    pub fn spec(&self) -> Result<DatasetSpec> {
        let source = match (&self.data, self.synthetic) {
            (Some(path), _) => match self.format {
                Format::Csv => {
                    let label_column = match &self.label_column {
                        None => LabelColumn::Last,
                        Some(s) => match s.parse::<usize>() {
                            Ok(i) => LabelColumn::Index(i),
                            Err(_) => LabelColumn::Name(s.clone()),
                        },
                    };
                    if !self.delimiter.is_ascii() {
                        bail!("delimiter must be a single ASCII character");
                    }
                    DataSource::Csv {
                        path: path.clone(),
                        options: CsvOptions {
                            label_column,
                            has_header: self.header,
                            delimiter: self.delimiter as u8,
                        },
                    }
                }
                Format::Idx => DataSource::Idx {
                    images: path.clone(),
                    labels: self.labels.clone().context("--labels is required with --format idx")?,
                },
            },
            (None, Some(Synthetic::Triangle)) => DataSource::TrianglePair,
            (None, Some(Synthetic::Gaussian6)) => DataSource::SyntheticGaussian {
                means: SIX_CLASS_MEANS.iter().map(|m| m.to_vec()).collect(),
                samples_per_class: self.samples_per_class,
                cov_scale: self.cov_scale,
            },
            (None, None) => bail!("one of --data or --synthetic is required"),
        };
        Ok(DatasetSpec {
            source,
            classes_filter: self.classes.clone(),
            per_class_count: self.per_class,
            seed: self.seed,
            normalize: match self.normalize {
                NormalizeArg::None => Normalize::None,
                NormalizeArg::Unit => Normalize::UnitScale,
            },
        })
    }

    pub fn load(&self) -> Result<LabeledPointCloud> {
        let what = match (&self.data, self.synthetic) {
            (Some(path), _) => path.display().to_string(),
            (None, Some(s)) => format!("synthetic {s:?}").to_lowercase(),
            (None, None) => String::new(),
        };
        let (cloud, _) = advbound::data::load_dataset(&self.spec()?).with_context(|| format!("loading {what}"))?;
        Ok(cloud)
    }
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    #[arg(long, default_value = "l2")]
    pub metric: Metric,
    /// Worker threads for complex construction.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Wall-clock limit per solve.
    #[arg(long, default_value_t = 600.0)]
    pub max_seconds: f64,
    /// Abort when the complex grows beyond this many interactions.
    #[arg(long, default_value_t = advbound::complex::DEFAULT_MAX_INTERACTIONS)]
    pub max_interactions: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Lp,
    Sinkhorn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepSolver {
    Lp,
    Sinkhorn,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct SinkhornArgs {
    /// Target accuracy; sets η and δ′ from the convergence schedule.
    #[arg(long, default_value_t = 0.1, conflicts_with = "eta")]
    pub delta: f64,
    /// Fixed entropic parameter (skips the schedule and smoothing).
    #[arg(long, requires = "delta_prime")]
    pub eta: Option<f64>,
    /// Stopping tolerance on the marginal error, used with --eta.
    #[arg(long, requires = "eta")]
    pub delta_prime: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ComplexCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 2)]
    pub level: usize,
}

#[derive(Args, Debug)]
pub struct SolveCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sinkhorn: SinkhornArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 2)]
    pub level: usize,
    #[arg(long, value_enum, default_value = "lp")]
    pub solver: Solver,
    /// Report runtime_ms as 0 so output is reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Args, Debug)]
pub struct SweepCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sinkhorn: SinkhornArgs,
    /// `start:stop:steps`, inclusive of both ends.
    #[arg(long)]
    pub eps_grid: String,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub levels: Vec<usize>,
    #[arg(long, value_enum, default_value = "lp")]
    pub solver: SweepSolver,
    /// Run this many (ε, level) cells concurrently.
    #[arg(long, default_value_t = 1)]
    pub parallel_cells: usize,
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Args, Debug)]
pub struct BoundCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 2)]
    pub level: usize,
}

#[derive(Args, Debug)]
pub struct SynthCmd {
    #[arg(long, value_enum, default_value = "gaussian6")]
    pub kind: Synthetic,
    #[arg(long, default_value_t = 20)]
    pub samples_per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    pub cov_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `start:stop:steps` into `steps` evenly spaced values.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, steps] = parts.as_slice() else {
        bail!("grid must be start:stop:steps, got `{s}`");
    };
    let start: f64 = start.trim().parse().with_context(|| format!("grid start `{start}`"))?;
    let stop: f64 = stop.trim().parse().with_context(|| format!("grid stop `{stop}`"))?;
    let steps: usize = steps.trim().parse().with_context(|| format!("grid steps `{steps}`"))?;
    if steps == 0 {
        bail!("grid needs at least one step");
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    Ok((0..steps)
        .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
        .collect())
}
