//! Batch command-line harness: every run is reproducible from its
//! manifest, every file output is byte-stable, and exit codes follow the
//! convention 0 = success, 1 = environment/I-O, 2 = usage/validation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use heavytail::bounds::{rate_constants, MixingDecay, MomentSpec};
use heavytail::error::Error as HtError;
use heavytail::estimators::{
    decompose, hill_default_k, hill_estimate, huber_estimate, huber_threshold, sample_mean,
    truncated_mean_bubeck, write_decomposition_csv, EstimatorReport,
};
use heavytail::experiments::{run_deviation_experiment_jobs, ExperimentConfig};
use heavytail::generators::{
    read_series_csv, write_series_csv, GeneratorDescriptor, TailDistribution, TailKind,
};
use heavytail::ingest::{analyze_returns, log_returns, parse_prices};
use heavytail::report::fmt_f64;

const SEED_ENV: &str = "HEAVYTAIL_SEED";

#[derive(Parser)]
#[command(
    name = "heavytail",
    version,
    about = "Concentration rates for dependent heavy-tailed sample means"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived rate-constant report.
    Constants(ConstantsArgs),
    /// Sample a path from a generator and write it as CSV.
    Simulate(SimulateArgs),
    /// Split a series into main and tail parts at a truncation level.
    Decompose(DecomposeArgs),
    /// Run one point estimator over a series.
    Estimate(EstimateArgs),
    /// Run a replicated deviation experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Analyze a price CSV: log returns, tail index curve, dependence test.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    alpha_prime: f64,
    /// Polynomial decay rate, a number > 2 or "inf" for independence.
    #[arg(long)]
    r: String,
    /// Envelope scale (ignored for r = "inf").
    #[arg(long = "C", default_value_t = 0.0, allow_hyphen_values = true)]
    c_envelope: f64,
    #[arg(long)]
    nu_alpha: f64,
    #[arg(long)]
    delta: f64,
    /// Exponent constant, a number or "c0" to solve 2 A delta^c0 = delta/2.
    #[arg(long)]
    c: String,
    /// Emit the JSON form instead of key = value lines.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Generator descriptor JSON file (alternative to the inline flags).
    #[arg(long, conflicts_with_all = ["kind", "tail_exponent", "scale", "location"])]
    gen: Option<PathBuf>,
    /// Marginal family: symmetric_pareto, pareto or student_t.
    #[arg(long, required_unless_present = "gen")]
    kind: Option<String>,
    #[arg(long, required_unless_present = "gen")]
    tail_exponent: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    location: f64,
    /// Check that E|X|^(1+alpha) is finite for this exponent before sampling.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n: u64,
    /// Path seed; defaults to the descriptor's seed (or 0 inline).
    /// HEAVYTAIL_SEED overrides when set.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Input series CSV (header `x`).
    #[arg(long)]
    data: PathBuf,
    /// Truncation level.
    #[arg(long)]
    b: f64,
    /// Analytic truncated means; supply both or neither.
    #[arg(long, requires = "mean_outside", allow_hyphen_values = true)]
    mean_inside: Option<f64>,
    #[arg(long, requires = "mean_inside", allow_hyphen_values = true)]
    mean_outside: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input series CSV (header `x`).
    #[arg(long)]
    data: PathBuf,
    /// One of: mean, truncated, huber, hill.
    #[arg(long)]
    estimator: String,
    #[arg(long)]
    b_scale: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Huber clipping level; derived from --mu-alpha/--delta/--alpha when absent.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    mu_alpha: Option<f64>,
    /// Hill order-statistic count; defaults to ceil(n^0.6).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json, rate_table.csv and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for replicates; the outputs do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Price CSV with header `date,close`.
    #[arg(long)]
    prices: PathBuf,
    /// Comma-separated Hill order-statistic counts; defaults to a ladder
    /// around ceil(n^0.6).
    #[arg(long)]
    k_grid: Option<String>,
    #[arg(long, default_value_t = 10)]
    max_lag: usize,
    /// Optional output directory for report.json and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Errors mapped to exit codes: usage/validation = 2, environment = 1.
enum CliError {
    Usage(String),
    Env(String),
}

impl From<HtError> for CliError {
    fn from(e: HtError) -> Self {
        match e {
            HtError::Io(_) => CliError::Env(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Env(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Env(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, bytes)
        .map_err(|e| CliError::Env(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: Option<u64>,
    parameters: BTreeMap<String, String>,
    outputs: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    fn write(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Env(format!("manifest serialization failed: {e}")))?;
        write_file(path, json.as_bytes())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Constants(args) => cmd_constants(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Analyze(args) => cmd_analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Env(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_decay(r: &str, c_envelope: f64) -> CliResult<MixingDecay> {
    if r == "inf" {
        Ok(MixingDecay::independent())
    } else {
        let rate: f64 =
            r.parse().map_err(|_| usage(format!("--r must be a number or \"inf\", got {r:?}")))?;
        Ok(MixingDecay::new(c_envelope, rate)?)
    }
}

fn cmd_constants(args: ConstantsArgs) -> CliResult<()> {
    let decay = parse_decay(&args.r, args.c_envelope)?;
    let moments = MomentSpec::new(args.alpha, args.alpha_prime, args.nu_alpha)?;
    let c = match args.c.as_str() {
        "c0" => rate_constants(decay, moments, args.delta, 1.0)?.c0,
        other => other
            .parse()
            .map_err(|_| usage(format!("--c must be a number or \"c0\", got {other:?}")))?,
    };
    let constants = rate_constants(decay, moments, args.delta, c)?;
    if args.json {
        println!("{}", constants.to_json_string());
    } else {
        print!("{}", constants.to_key_value_text());
    }
    if let Some(path) = args.manifest {
        let mut m = RunManifest::new("constants", None);
        m.param("alpha", args.alpha)
            .param("alpha_prime", args.alpha_prime)
            .param("r", &args.r)
            .param("c_envelope", args.c_envelope)
            .param("nu_alpha", args.nu_alpha)
            .param("delta", args.delta)
            .param("c", &args.c)
            .param("json", args.json);
        m.write(&path)?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    if args.n == 0 {
        return Err(usage("--n must be >= 1"));
    }
    let mut seed_flag = args.seed;
    if let Ok(env_seed) = std::env::var(SEED_ENV) {
        seed_flag = Some(env_seed.parse().map_err(|_| {
            usage(format!("{SEED_ENV} must be an unsigned integer, got {env_seed:?}"))
        })?);
    }
    let gen = match &args.gen {
        Some(path) => {
            let text = read_file(path)?;
            let gen: GeneratorDescriptor = serde_json::from_str(&text)
                .map_err(|e| usage(format!("bad generator descriptor: {e}")))?;
            match seed_flag {
                Some(s) => gen.with_seed(s),
                None => gen,
            }
        }
        None => {
            let kind = TailKind::parse(args.kind.as_deref().expect("required by clap"))?;
            let base = TailDistribution::new(
                kind,
                args.tail_exponent.expect("required by clap"),
                args.scale,
                args.location,
            )?;
            GeneratorDescriptor::iid(base, seed_flag.unwrap_or(0))
        }
    };
    let seed = gen.seed();
    if let Some(alpha) = args.alpha {
        gen.base().ensure_moment(alpha)?;
    }
    let n = usize::try_from(args.n).map_err(|_| usage("--n too large"))?;
    let path = gen.sample_path(n)?;
    let mut buf = Vec::with_capacity(path.len() * 24 + 2);
    write_series_csv(&mut buf, &path)?;
    write_file(&args.out, &buf)?;

    let manifest_path = args.manifest.unwrap_or_else(|| manifest_sibling(&args.out));
    let mut m = RunManifest::new("simulate", Some(seed));
    match &args.gen {
        Some(p) => {
            m.param("gen", p.display());
        }
        None => {
            m.param("kind", args.kind.as_deref().unwrap_or_default())
                .param("tail_exponent", args.tail_exponent.unwrap_or_default())
                .param("scale", args.scale)
                .param("location", args.location);
        }
    }
    if let Some(alpha) = args.alpha {
        m.param("alpha", alpha);
    }
    m.param("n", args.n).param("seed", seed).output(&args.out);
    m.write(&manifest_path)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn manifest_sibling(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".manifest.json");
    PathBuf::from(os)
}

fn cmd_decompose(args: DecomposeArgs) -> CliResult<()> {
    let text = read_file(&args.data)?;
    let xs = read_series_csv(text.as_bytes())?;
    let centers = match (args.mean_inside, args.mean_outside) {
        (Some(ci), Some(co)) => Some((ci, co)),
        _ => None,
    };
    let d = decompose(&xs, args.b, centers)?;
    let mut buf = Vec::new();
    write_decomposition_csv(&mut buf, &xs, &d)?;
    write_file(&args.out, &buf)?;

    println!(
        "{{\"n\": {}, \"b\": {}, \"centering\": \"{}\", \"main_avg\": {}, \"tail_avg\": {}}}",
        xs.len(),
        fmt_f64(args.b),
        match centers {
            Some(_) => "analytic",
            None => "none",
        },
        fmt_f64(d.main_avg),
        fmt_f64(d.tail_avg),
    );

    let manifest_path = args.manifest.unwrap_or_else(|| manifest_sibling(&args.out));
    let mut m = RunManifest::new("decompose", None);
    m.param("data", args.data.display()).param("b", args.b);
    if let Some((ci, co)) = centers {
        m.param("mean_inside", ci).param("mean_outside", co);
    }
    m.output(&args.out);
    m.write(&manifest_path)?;
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> CliResult<()> {
    let text = read_file(&args.data)?;
    let xs = read_series_csv(text.as_bytes())?;
    let mut params = BTreeMap::new();
    let report = match args.estimator.as_str() {
        "mean" => EstimatorReport::new("mean", xs.len(), params, sample_mean(&xs)?),
        "truncated" => {
            let b_scale =
                args.b_scale.ok_or_else(|| usage("--b-scale is required for truncated"))?;
            let delta = args.delta.ok_or_else(|| usage("--delta is required for truncated"))?;
            let alpha = args.alpha.ok_or_else(|| usage("--alpha is required for truncated"))?;
            params.insert("b_scale".into(), b_scale.to_string());
            params.insert("delta".into(), delta.to_string());
            params.insert("alpha".into(), alpha.to_string());
            EstimatorReport::new(
                "truncated",
                xs.len(),
                params,
                truncated_mean_bubeck(&xs, b_scale, delta, alpha)?,
            )
        }
        "huber" => {
            let h = match args.h {
                Some(h) => h,
                None => {
                    let mu = args.mu_alpha.ok_or_else(|| {
                        usage("--h or --mu-alpha/--delta/--alpha required for huber")
                    })?;
                    let delta = args
                        .delta
                        .ok_or_else(|| usage("--delta is required to derive the huber level"))?;
                    let alpha = args
                        .alpha
                        .ok_or_else(|| usage("--alpha is required to derive the huber level"))?;
                    huber_threshold(mu, xs.len() as u64, delta, alpha)?
                }
            };
            params.insert("h".into(), h.to_string());
            EstimatorReport::new("huber", xs.len(), params, huber_estimate(&xs, h)?)
        }
        "hill" => {
            let k = args.k.unwrap_or_else(|| hill_default_k(xs.len()));
            params.insert("k".into(), k.to_string());
            let est = hill_estimate(&xs, k)?;
            EstimatorReport::new("hill", xs.len(), params, est.index)
        }
        other => return Err(usage(format!("unknown estimator {other:?}"))),
    };
    println!("{}", report.to_json_string());
    if let Some(path) = args.manifest {
        let mut m = RunManifest::new("estimate", None);
        m.param("data", args.data.display()).param("estimator", &args.estimator);
        for (k, v) in &report.parameters {
            m.param(k, v);
        }
        m.write(&path)?;
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> CliResult<()> {
    if args.jobs == Some(0) {
        return Err(usage("--jobs must be >= 1"));
    }
    let text = read_file(&args.config)?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("bad experiment config: {e}")))?;
    let report = run_deviation_experiment_jobs(&cfg, args.jobs)?;

    let report_path = args.out.join("report.json");
    let table_path = args.out.join("rate_table.csv");
    write_file(&report_path, report.to_json_string().as_bytes())?;
    let mut table = Vec::new();
    report.write_rate_table_csv(&mut table)?;
    write_file(&table_path, &table)?;

    let mut m = RunManifest::new("experiment", Some(cfg.master_seed));
    m.param("config", args.config.display());
    if let Some(jobs) = args.jobs {
        m.param("jobs", jobs);
    }
    m.output(&report_path).output(&table_path);
    m.write(&args.out.join("manifest.json"))?;
    eprintln!("wrote {} and {}", report_path.display(), table_path.display());
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult<()> {
    let text = read_file(&args.prices)?;
    let series = parse_prices(text.as_bytes())?;
    let returns = log_returns(&series);
    let k_grid: Vec<usize> = match &args.k_grid {
        Some(spec) => spec
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| usage(format!("bad k value {t:?}"))))
            .collect::<CliResult<Vec<usize>>>()?,
        None => default_k_ladder(returns.len()),
    };
    let report = analyze_returns(&returns, &k_grid, args.max_lag)?;
    let rendered = report.to_json_string();
    println!("{rendered}");
    if let Some(dir) = &args.out {
        let report_path = dir.join("report.json");
        write_file(&report_path, rendered.as_bytes())?;
        let mut m = RunManifest::new("analyze", None);
        m.param("prices", args.prices.display())
            .param("max_lag", args.max_lag)
            .param("k_grid", k_grid.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","))
            .output(&report_path);
        m.write(&dir.join("manifest.json"))?;
    }
    Ok(())
}

/// Sensitivity ladder around the default order-statistic count:
/// exponents 0.5, 0.55, 0.6, 0.65, 0.7 of the sample size.
fn default_k_ladder(n: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = [0.5f64, 0.55, 0.6, 0.65, 0.7]
        .iter()
        .map(|&e| ((n as f64).powf(e).ceil() as usize).clamp(1, n.saturating_sub(2).max(1)))
        .collect();
    ks.dedup();
    ks
}
