use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use lagte::batch::{run_batch, BatchSpec};
use lagte::io::{
    extract_incident_window, load_path_spec, load_speed_csv, parse_timestamp, LoadOptions,
};
use lagte::network::{analyze_paths, AnalyzeOptions, HopPairing, RoadNetworkInput};
use lagte::report::{emit_report, write_config_comment, write_histogram, Format};
use lagte::{core, parallel};
use lagte_core::{generate_pair, NormMethod, PipelineConfig, SimSpec, SpeedSeries, Window};

#[derive(Parser)]
#[command(
    name = "lagte",
    version,
    about = "Delay estimation with lag-specific effective transfer entropy"
)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a coupled pair with a known lag and estimate it.
    Simulate(SimulateArgs),
    /// Estimate the delay from one road to another in a speed CSV.
    Estimate(EstimateArgs),
    /// Pick the (length, window) pair minimizing σ̂²/B.
    GridSearch(GridSearchArgs),
    /// Run simulation batches over lag/noise/method/window grids.
    BatchSim(BatchArgs),
    /// Estimate per-hop delays along propagation paths.
    PathAnalyze(PathArgs),
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Order of the one-sided moving-average trend.
    #[arg(long, default_value_t = 2)]
    trend_order: usize,
    /// Normalization window in samples, or `full`.
    #[arg(long, default_value = "20")]
    window: Window,
    /// Markov states used for the residual bootstrap.
    #[arg(long, default_value_t = 10)]
    residual_states: usize,
    /// Symbols used for encoding; must equal the number of quantiles plus one.
    #[arg(long, default_value_t = 3)]
    bins: usize,
    /// Encoding quantile levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.95")]
    quantiles: Vec<f64>,
    /// Bootstrap replicates.
    #[arg(short = 'B', long = "boot-reps", default_value_t = 100)]
    boot_reps: usize,
    /// Source shuffles per lag for the effective TE correction.
    #[arg(short = 'S', long = "shuffle-reps", default_value_t = 50)]
    shuffle_reps: usize,
    #[arg(long, default_value_t = 1)]
    lag_min: usize,
    #[arg(long, default_value_t = 30)]
    lag_max: usize,
    /// none, minmax, zscore or nonlinear.
    #[arg(long, default_value = "nonlinear")]
    method: NormMethod,
    #[arg(long, env = "LAGTE_SEED", default_value_t = 0)]
    seed: u64,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            trend_order: self.trend_order,
            window: self.window,
            residual_states: self.residual_states,
            encode_bins: self.bins,
            encode_quantiles: self.quantiles.clone(),
            boot_reps: self.boot_reps,
            shuffle_reps: self.shuffle_reps,
            lag_min: self.lag_min,
            lag_max: self.lag_max,
            norm_method: self.method,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// True lag in samples.
    #[arg(long)]
    u0: usize,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 120)]
    length: usize,
    /// Seed for the simulated noise (default: the pipeline seed).
    #[arg(long)]
    sim_seed: Option<u64>,
    /// Histogram CSV output (lag,count).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct DataArgs {
    /// Speed CSV with header `timestamp,road_id,speed_kmh`.
    #[arg(long)]
    data: PathBuf,
    /// Longest gap in minutes filled by interpolation.
    #[arg(long, default_value_t = 10)]
    max_gap: i64,
    /// Sampling period in minutes.
    #[arg(long, default_value_t = 1)]
    period: i64,
}

impl DataArgs {
    fn load(&self) -> anyhow::Result<lagte::io::SpeedData> {
        let options = LoadOptions {
            period_minutes: self.period,
            max_gap_minutes: self.max_gap,
        };
        Ok(load_speed_csv(&self.data, &options)?)
    }
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Source road id.
    #[arg(long)]
    source: String,
    /// Target road id.
    #[arg(long)]
    target: String,
    /// Incident time; when given, both series are cut to the incident window.
    #[arg(long)]
    incident: Option<String>,
    #[arg(long, default_value_t = 60)]
    before: i64,
    #[arg(long, default_value_t = 120)]
    after: i64,
}

impl PairArgs {
    fn load(&self) -> anyhow::Result<(SpeedSeries, SpeedSeries)> {
        let data = self.data.load()?;
        let pick = |road: &str| -> anyhow::Result<SpeedSeries> {
            let s = data.series.get(road).with_context(|| {
                format!("road `{road}` not found in {}", self.data.data.display())
            })?;
            match &self.incident {
                Some(t) => {
                    let time = parse_timestamp(t)
                        .with_context(|| format!("invalid incident time `{t}`"))?;
                    Ok(extract_incident_window(s, time, self.before, self.after)?)
                }
                None => Ok(s.clone()),
            }
        };
        Ok((pick(&self.source)?, pick(&self.target)?))
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Histogram CSV output (lag,count).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct GridSearchArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Candidate series lengths (most recent samples kept).
    #[arg(long, value_delimiter = ',', required = true)]
    lengths: Vec<usize>,
    /// Candidate windows, e.g. 10,20,30,40,full.
    #[arg(
        long = "windows",
        value_delimiter = ',',
        default_value = "10,20,30,40,full"
    )]
    windows: Vec<Window>,
    /// Per-cell CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long, value_delimiter = ',', default_value = "10")]
    lags: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    noises: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "none,nonlinear")]
    methods: Vec<NormMethod>,
    #[arg(long = "windows", value_delimiter = ',', default_value = "20")]
    windows: Vec<Window>,
    /// Simulated pairs per cell.
    #[arg(short = 'R', long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, default_value_t = 120)]
    length: usize,
    /// Batch CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Path spec JSON with `incident` and `paths`.
    #[arg(long)]
    paths: PathBuf,
    #[arg(long, default_value_t = 3)]
    max_hops: usize,
    #[arg(long, default_value_t = 60)]
    before: i64,
    #[arg(long, default_value_t = 120)]
    after: i64,
    /// σ̂² threshold for the causality flag (default: half the uniform-lag variance).
    #[arg(long)]
    threshold: Option<f64>,
    /// Pair each hop with the preceding road instead of the incident road.
    #[arg(long)]
    consecutive: bool,
    /// Report output; format follows the extension unless --format is set.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    format: Option<Format>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command, out: &mut impl Write) -> anyhow::Result<()> {
    match command {
        Command::Simulate(a) => simulate(a, out),
        Command::Estimate(a) => estimate(a, out),
        Command::GridSearch(a) => grid(a, out),
        Command::BatchSim(a) => batch(a, out),
        Command::PathAnalyze(a) => paths(a, out),
    }
}

fn resolved(out: &mut impl Write, config: &PipelineConfig) -> anyhow::Result<()> {
    config.validate()?;
    write_config_comment(out, config)?;
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn print_sample(out: &mut impl Write, sample: &core::LagSample) -> anyhow::Result<()> {
    writeln!(out, "mu_hat      {}", sample.mu_hat)?;
    writeln!(out, "sigma2_hat  {}", sample.sigma2_hat)?;
    writeln!(out, "ci95        [{}, {}]", sample.ci95.0, sample.ci95.1)?;
    Ok(())
}

fn save_histogram<C: serde::Serialize>(
    path: &Path,
    sample: &core::LagSample,
    provenance: &C,
) -> anyhow::Result<()> {
    let mut file = create(path)?;
    write_histogram(&mut file, &sample.histogram(), provenance)?;
    file.flush()?;
    Ok(())
}

#[derive(serde::Serialize)]
struct SimulateProvenance<'a> {
    simulation: &'a SimSpec,
    pipeline: &'a PipelineConfig,
}

fn simulate(a: SimulateArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let config = a.pipeline.config();
    let sim = SimSpec {
        u0: a.u0,
        noise_sigma: a.noise,
        length: a.length,
        seed: a.sim_seed.unwrap_or(config.seed),
    };
    let provenance = SimulateProvenance {
        simulation: &sim,
        pipeline: &config,
    };
    config.validate()?;
    write_config_comment(out, &provenance)?;
    let (x, y) = generate_pair(&sim)?;
    let sample = parallel::estimate_delay(&x, &y, &config)?;
    print_sample(out, &sample)?;
    writeln!(out, "mae         {}", sample.mae(a.u0))?;
    if let Some(path) = &a.out {
        save_histogram(path, &sample, &provenance)?;
    }
    Ok(())
}

fn estimate(a: EstimateArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let config = a.pipeline.config();
    resolved(out, &config)?;
    let (x, y) = a.pair.load()?;
    let est = parallel::estimate_delay_detailed(&x, &y, &config)?;
    print_sample(out, &est.sample)?;
    let d = &est.diagnostics;
    writeln!(
        out,
        "flat        {}/{}",
        d.flat_profiles,
        est.sample.boot_reps()
    )?;
    if let Some(path) = &a.out {
        save_histogram(path, &est.sample, &config)?;
    }
    Ok(())
}

fn grid(a: GridSearchArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let config = a.pipeline.config();
    resolved(out, &config)?;
    let (x, y) = a.pair.load()?;
    let result = parallel::grid_search(&x, &y, &config, &a.lengths, &a.windows)?;
    writeln!(
        out,
        "{:>6} {:>6} {:>14} {:>10} {:>12}",
        "L", "window", "score", "mu_hat", "sigma2_hat"
    )?;
    for cell in &result.cells {
        match (&cell.sample, cell.score) {
            (Some(s), Some(score)) => writeln!(
                out,
                "{:>6} {:>6} {:>14.6} {:>10.3} {:>12.4}",
                cell.len,
                cell.window.to_string(),
                score,
                s.mu_hat,
                s.sigma2_hat
            )?,
            _ => writeln!(
                out,
                "{:>6} {:>6} skipped: {}",
                cell.len,
                cell.window.to_string(),
                cell.skipped.as_deref().unwrap_or("")
            )?,
        }
    }
    let (len, window) = result.best_pair();
    writeln!(out, "best        L={len} window={window}")?;
    if let Some(path) = &a.out {
        let mut file = create(path)?;
        write_config_comment(&mut file, &config)?;
        let mut wtr = csv::Writer::from_writer(&mut file);
        wtr.write_record(["len", "window", "score", "mu_hat", "sigma2_hat", "skipped"])?;
        for cell in &result.cells {
            let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            wtr.write_record([
                cell.len.to_string(),
                cell.window.to_string(),
                num(cell.score),
                num(cell.sample.as_ref().map(|s| s.mu_hat)),
                num(cell.sample.as_ref().map(|s| s.sigma2_hat)),
                cell.skipped.clone().unwrap_or_default(),
            ])?;
        }
        wtr.flush()?;
        drop(wtr);
        file.flush()?;
    }
    Ok(())
}

fn batch(a: BatchArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let spec = BatchSpec {
        lags: a.lags,
        noises: a.noises,
        methods: a.methods,
        windows: a.windows,
        replicates: a.replicates,
        length: a.length,
        base: a.pipeline.config(),
    };
    spec.base.validate()?;
    write_config_comment(out, &spec)?;
    let report = run_batch(&spec)?;
    write!(out, "{}", report.to_table())?;
    if let Some(path) = &a.out {
        let mut file = create(path)?;
        report.write_csv(&mut file)?;
        file.flush()?;
    }
    Ok(())
}

fn paths(a: PathArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let config = a.pipeline.config();
    resolved(out, &config)?;
    if a.max_hops == 0 {
        bail!("--max-hops must be at least 1");
    }
    let spec = load_path_spec(&a.paths)?;
    let input = RoadNetworkInput::from_spec(a.data.load()?, &spec)?;
    let options = AnalyzeOptions {
        max_hops: a.max_hops,
        before_minutes: a.before,
        after_minutes: a.after,
        variance_threshold: a.threshold,
        pairing: if a.consecutive {
            HopPairing::Consecutive
        } else {
            HopPairing::Root
        },
    };
    let report = analyze_paths(&input, &config, &options)?;
    for path in &report.paths {
        writeln!(out, "path {}", path.path.join(" > "))?;
        for hop in &path.hops {
            match &hop.estimate {
                Some(e) => writeln!(
                    out,
                    "  hop{} {:<12} mu_hat {:>8.3}  sigma2_hat {:>8.3}{}",
                    hop.hop,
                    hop.target,
                    e.sample.mu_hat,
                    e.sample.sigma2_hat,
                    if hop.causality_flag { "  weak" } else { "" }
                )?,
                None => writeln!(
                    out,
                    "  hop{} {:<12} failed: {}",
                    hop.hop,
                    hop.target,
                    hop.error.as_deref().unwrap_or("")
                )?,
            }
        }
    }
    let format = a.format.unwrap_or_else(|| Format::from_path(&a.out));
    emit_report(&report, format, &a.out)?;
    Ok(())
}
