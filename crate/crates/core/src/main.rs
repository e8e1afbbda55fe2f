use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use refgeo::feature_store::{load_features, load_manifest, subsample};
use refgeo::geometry::{describe, DEFAULT_DENSITY_K};
use refgeo::metrics::{
    frechet_metric, kid_mmd, precision_recall_metrics, DEFAULT_NUM_SUBSETS, DEFAULT_PR_K,
    DEFAULT_SUBSET_SIZE,
};
use refgeo::mixed_models::{moderation_test, ols_attribution, omnibus_test, ObservationTable};
use refgeo::report::{parse_rows, to_json_line, DescribeRow, Row, RowKind, Table};
use refgeo::toy_model::{verify_toy_with_k, ToyConfig, DEFAULT_TOY_SAMPLES};
use refgeo::{Error, FeatureMatrix, Result};

/// Reference-distribution geometry, generative-model metrics and
/// hierarchical-model tests.
///
/// Every subcommand except `report` prints JSON lines; `--out` appends them
/// to a file instead.
#[derive(Parser)]
#[command(name = "refgeo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean kNN log-density and effective rank of one feature set.
    Describe(DescribeArgs),
    /// Distance or support metric between a reference and a generated set.
    Metric(MetricArgs),
    /// Omnibus and moderation tests on an observation table.
    Analyze(AnalyzeArgs),
    /// Sample the Gaussian toy model and compare with its closed form.
    Toy(ToyArgs),
    /// Render JSON-lines rows as an aligned text table and CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Append output rows to this file instead of printing them.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DescribeArgs {
    /// Feature matrix (.npy) or dataset manifest (.json).
    input: PathBuf,
    /// Neighbor rank for the density.
    #[arg(long, default_value_t = DEFAULT_DENSITY_K)]
    k: usize,
    /// Row label; defaults to the manifest name or the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Use a seeded random subsample of this many rows.
    #[arg(long)]
    max_rows: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricName {
    Frechet,
    Kid,
    Pr,
}

#[derive(Args)]
struct MetricArgs {
    metric: MetricName,
    /// Reference features (.npy or manifest .json).
    reference: PathBuf,
    /// Generated features (.npy or manifest .json).
    generated: PathBuf,
    /// Neighbor rank for precision/recall.
    #[arg(long, default_value_t = DEFAULT_PR_K)]
    k: usize,
    /// KID subset size; defaults to min(1000, n_ref, n_gen).
    #[arg(long)]
    subset_size: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_NUM_SUBSETS)]
    num_subsets: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Observation CSV with a `group` column.
    observations: PathBuf,
    #[arg(long, default_value = "x")]
    x: String,
    #[arg(long, default_value = "y")]
    y: String,
    /// Covariate column in the `--covariates` CSV; enables the moderation test.
    #[arg(long, requires = "covariates")]
    z: Option<String>,
    /// Covariate CSV with a `group` column.
    #[arg(long, requires = "z")]
    covariates: Option<PathBuf>,
    /// z-score x, y and z before fitting (default).
    #[arg(long, overrides_with = "no_standardize")]
    standardize: bool,
    #[arg(long, overrides_with = "standardize")]
    no_standardize: bool,
    /// Also emit one OLS R² row per group.
    #[arg(long)]
    per_group_r2: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 8)]
    rank: usize,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_TOY_SAMPLES)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_DENSITY_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON-lines files, concatenated in order.
    inputs: Vec<PathBuf>,
    /// Header to use when there are no rows.
    #[arg(long, default_value = "describe")]
    kind: String,
    /// Write the text table here instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn load(path: &Path) -> Result<(String, FeatureMatrix)> {
    if !path.exists() {
        return Err(Error::Argument(format!("{}: no such file", path.display())));
    }
    let is_manifest = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_manifest {
        let (manifest, m) = load_manifest(path)?;
        Ok((manifest.name, m))
    } else {
        let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        Ok((stem, load_features(path)?))
    }
}

fn emit(out: &OutArgs, text: &str) -> Result<()> {
    match &out.out {
        Some(path) => {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::Io { path: path.clone(), source: e })?;
            f.write_all(text.as_bytes())
                .map_err(|e| Error::Io { path: path.clone(), source: e })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn cmd_describe(a: &DescribeArgs) -> Result<()> {
    let (stem, mut m) = load(&a.input)?;
    if let Some(rows) = a.max_rows {
        if rows < m.n() {
            m = subsample(&m, rows, a.seed)?;
        }
    }
    let g = describe(&m, a.k)?;
    let row = DescribeRow::new(a.name.clone().unwrap_or(stem), m.dim(), &g);
    emit(&a.out, &to_json_line(&row))
}

fn cmd_metric(a: &MetricArgs) -> Result<()> {
    let (_, reference) = load(&a.reference)?;
    let (_, generated) = load(&a.generated)?;
    if reference.dim() != generated.dim() {
        return Err(Error::Argument(format!(
            "feature dimensions differ: reference {} vs generated {}",
            reference.dim(),
            generated.dim()
        )));
    }
    let text = match a.metric {
        MetricName::Frechet => to_json_line(&frechet_metric(&reference, &generated)?),
        MetricName::Kid => {
            let size = a
                .subset_size
                .unwrap_or_else(|| DEFAULT_SUBSET_SIZE.min(reference.n()).min(generated.n()));
            to_json_line(&kid_mmd(&reference, &generated, size, a.num_subsets, a.seed)?)
        }
        MetricName::Pr => precision_recall_metrics(&reference, &generated, a.k)?
            .iter()
            .map(to_json_line)
            .collect(),
    };
    emit(&a.out, &text)
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    for p in std::iter::once(&a.observations).chain(a.covariates.as_ref()) {
        if !p.exists() {
            return Err(Error::Argument(format!("{}: no such file", p.display())));
        }
    }
    let cov = a.covariates.as_deref().zip(a.z.as_deref());
    let table = ObservationTable::from_csv(&a.observations, &a.x, &a.y, cov)?;
    let standardize = !a.no_standardize;
    let mut text = to_json_line(&omnibus_test(&table, standardize)?);
    if cov.is_some() {
        text.push_str(&to_json_line(&moderation_test(&table, standardize)?));
    }
    if a.per_group_r2 {
        for r in ols_attribution(&table)? {
            text.push_str(&to_json_line(&r));
        }
    }
    emit(&a.out, &text)
}

fn cmd_toy(a: &ToyArgs) -> Result<()> {
    let c = ToyConfig {
        dim: a.dim,
        rank: a.rank,
        lambda: a.lambda,
        n: a.n,
        seed: a.seed,
    };
    emit(&a.out, &to_json_line(&verify_toy_with_k(&c, a.k)?))
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let empty_kind: RowKind = a.kind.parse()?;
    let mut rows: Vec<Row> = Vec::new();
    for p in &a.inputs {
        let text = fs::read_to_string(p).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::Argument(format!("{}: no such file", p.display()))
            } else {
                Error::Io { path: p.clone(), source: e }
            }
        })?;
        rows.extend(parse_rows(&text, &p.display().to_string())?);
    }
    let table = Table::build(&rows, empty_kind)?;
    if let Some(path) = &a.csv {
        write_file(path, &table.render_csv())?;
    }
    match &a.out {
        Some(path) => write_file(path, &table.render_text()),
        None => {
            print!("{}", table.render_text());
            Ok(())
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("REFGEO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Argument(format!("REFGEO_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Argument(format!("cannot size the thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Describe(a) => cmd_describe(a),
        Command::Metric(a) => cmd_metric(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Toy(a) => cmd_toy(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("refgeo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
