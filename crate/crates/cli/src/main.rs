//! `pimo`: per-image anomaly localization metrics from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use pimo_core::curves::{
    aupro, auroc, compute_aupimo, pro_curve, roc_curve, AupimoConfig, AuproOptions, FprBounds,
    PartialPolicy, AUPRO_STRICT_MAX_FPR, DEFAULT_AUPRO_MAX_FPR, DEFAULT_FPR_LOWER,
    DEFAULT_FPR_UPPER,
};
use pimo_core::grid::DEFAULT_NUM_THRESHOLDS;
use pimo_core::io::curves_csv::write_text;
use pimo_core::io::{
    emit_report, load_score_file, pimo_csv, render_heatmap, roc_pro_csv, save_heatmap_png,
    save_mask_png, save_score_file, write_report_bundle, Manifest, ManifestEntry, ModelResults,
    ScoreFileRecord,
};
use pimo_core::perturb::{synthesize_noisy_mask, NoiseProfile, TinyBlobTable};
use pimo_core::regions::Connectivity;
use pimo_core::synth::{synthetic_dataset, SynthConfig};
use pimo_core::{build_threshold_grid, Dataset, Error, GridMode, Result};

#[derive(Parser)]
#[command(name = "pimo", version, about = "Per-image overlap metrics for anomaly localization")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "PIMO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute AUROC, AUPRO and per-image AUPIMO for one model's score maps.
    Compute(ComputeArgs),
    /// Compare models: ranks, boxplot statistics and pairwise tests.
    Report(ReportArgs),
    /// Write noisy copies of the ground-truth masks.
    Perturb(PerturbArgs),
    /// Time each metric on a manifest or a synthetic dataset.
    Bench(BenchArgs),
    /// Render score overlays colored by the AUPIMO threshold bounds.
    Heatmap(HeatmapArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridArg {
    Linear,
    Exact,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Strict,
    Renormalize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConnArg {
    #[value(name = "4")]
    Four,
    #[value(name = "8")]
    Eight,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Auroc,
    Aupro,
    Aupimo,
}

#[derive(Args, Clone)]
struct MetricArgs {
    /// Metrics to compute.
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["auroc", "aupro", "aupimo"])]
    metrics: Vec<Metric>,
    /// Threshold grid for AUROC and AUPRO.
    #[arg(long, value_enum, default_value = "linear")]
    grid_mode: GridArg,
    #[arg(long, default_value_t = DEFAULT_NUM_THRESHOLDS)]
    num_thresholds: usize,
    /// Lower shared-FPR bound of the AUPIMO integral.
    #[arg(long, default_value_t = DEFAULT_FPR_LOWER)]
    fpr_lower: f64,
    /// Upper shared-FPR bound of the AUPIMO integral.
    #[arg(long, default_value_t = DEFAULT_FPR_UPPER)]
    fpr_upper: f64,
    /// What to do when the grid does not reach both FPR bounds.
    #[arg(long, value_enum, default_value = "strict")]
    partial_policy: PolicyArg,
    /// FPR integration limit of AUPRO.
    #[arg(long, default_value_t = DEFAULT_AUPRO_MAX_FPR)]
    aupro_u: f64,
    /// Shorthand for `--aupro-u 0.05`.
    #[arg(long, conflicts_with = "aupro_u")]
    aupro_u_5pct: bool,
    /// Stop the AUPRO integral at the last point below its limit.
    #[arg(long)]
    aupro_truncate: bool,
    /// Pixel connectivity for AUPRO regions (4 or 8).
    #[arg(long, value_enum, default_value = "8")]
    connectivity: ConnArg,
}

impl MetricArgs {
    fn connectivity(&self) -> Connectivity {
        match self.connectivity {
            ConnArg::Four => Connectivity::Four,
            ConnArg::Eight => Connectivity::Eight,
        }
    }

    fn aupro_options(&self) -> AuproOptions {
        AuproOptions {
            max_fpr: if self.aupro_u_5pct { AUPRO_STRICT_MAX_FPR } else { self.aupro_u },
            truncate: self.aupro_truncate,
        }
    }

    fn aupimo_config(&self) -> Result<AupimoConfig> {
        Ok(AupimoConfig {
            bounds: FprBounds::new(self.fpr_lower, self.fpr_upper)?,
            num_thresholds: self.num_thresholds,
            policy: match self.partial_policy {
                PolicyArg::Strict => PartialPolicy::Strict,
                PolicyArg::Renormalize => PartialPolicy::Renormalize,
            },
        })
    }

    fn grid_mode(&self) -> GridMode {
        match self.grid_mode {
            GridArg::Linear => GridMode::LinearGlobal,
            GridArg::Exact => GridMode::ExactUnique,
        }
    }

    fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }
}

#[derive(Args)]
struct ComputeArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    metrics: MetricArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// `NAME=DIR`, where DIR holds the output of `pimo compute`. Repeatable.
    #[arg(long = "model", required = true, value_parser = parse_model)]
    models: Vec<(String, PathBuf)>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct PerturbArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Blob table (JSON); defaults to the built-in VisA table.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Use one category row instead of the column average.
    #[arg(long)]
    category: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset manifest; a synthetic dataset is generated when absent.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    normal: usize,
    #[arg(long, default_value_t = 12)]
    anomalous: usize,
    /// Side length of the synthetic images.
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    metrics: MetricArgs,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Score file written by `pimo compute`; supplies the threshold bounds.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Image ids to render; all anomalous images in the score file by default.
    ids: Vec<String>,
}

fn parse_model(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, dir)) if !name.is_empty() && !dir.is_empty() => Ok((name.to_string(), dir.into())),
        _ => Err(format!("expected NAME=DIR, got `{s}`")),
    }
}

/// Dataset-level numbers written next to the score file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsFile {
    num_images: usize,
    num_normal: usize,
    num_anomalous: usize,
    grid: String,
    num_thresholds: usize,
    connectivity: u8,
    auroc: Option<f64>,
    aupro: Option<f64>,
    aupro_max_fpr: f64,
    aupro_truncate: bool,
    aupro_5pct: Option<f64>,
    aupimo_mean: Option<f64>,
}

const AUPIMO_FILE: &str = "aupimo.json";
const METRICS_FILE: &str = "metrics.json";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

struct Computed {
    metrics: MetricsFile,
    curves_csv: Option<String>,
    pimo: Option<(String, ScoreFileRecord)>,
    timings: Vec<(&'static str, f64)>,
}

fn compute(ds: &Dataset, args: &MetricArgs) -> Result<Computed> {
    let conn = args.connectivity();
    let opts = args.aupro_options();
    let mut timings = Vec::new();
    let mut metrics = MetricsFile {
        num_images: ds.samples().len(),
        num_normal: ds.num_normal(),
        num_anomalous: ds.num_anomalous(),
        grid: match args.grid_mode {
            GridArg::Linear => "linear_global".into(),
            GridArg::Exact => "exact_unique".into(),
        },
        num_thresholds: args.num_thresholds,
        connectivity: match args.connectivity {
            ConnArg::Four => 4,
            ConnArg::Eight => 8,
        },
        auroc: None,
        aupro: None,
        aupro_max_fpr: opts.max_fpr,
        aupro_truncate: opts.truncate,
        aupro_5pct: None,
        aupimo_mean: None,
    };
    let mut curves_csv = None;

    if args.wants(Metric::Auroc) || args.wants(Metric::Aupro) {
        let start = Instant::now();
        let grid = build_threshold_grid(ds, args.grid_mode(), args.num_thresholds)?;
        let roc = roc_curve(ds, &grid)?;
        if args.wants(Metric::Auroc) {
            metrics.auroc = Some(auroc(&roc));
            timings.push(("auroc", start.elapsed().as_secs_f64()));
        }
        let mut pro = None;
        if args.wants(Metric::Aupro) {
            let start = Instant::now();
            let grid = build_threshold_grid(ds, args.grid_mode(), args.num_thresholds)?;
            let curve = pro_curve(ds, &grid, conn)?;
            metrics.aupro = Some(aupro(&curve, opts)?);
            timings.push(("aupro", start.elapsed().as_secs_f64()));
            metrics.aupro_5pct = match aupro(&curve, AuproOptions { max_fpr: AUPRO_STRICT_MAX_FPR, ..opts }) {
                Ok(v) => Some(v),
                Err(e) => {
                    warn!("AUPRO at 5% FPR undefined: {e}");
                    None
                }
            };
            pro = Some(curve);
        }
        curves_csv = Some(roc_pro_csv(&roc, pro.as_ref())?);
    }

    let mut pimo = None;
    if args.wants(Metric::Aupimo) {
        let start = Instant::now();
        let (curve, result) = compute_aupimo(ds, args.aupimo_config()?)?;
        timings.push(("aupimo", start.elapsed().as_secs_f64()));
        if let Some((lo, hi)) = result.partial {
            warn!("AUPIMO integrated over the partial shared-FPR range [{lo:e}, {hi:e}]");
        }
        metrics.aupimo_mean = Some(result.mean());
        let record = ScoreFileRecord::from_result(&result, Some(result.ids.clone()))?;
        pimo = Some((pimo_csv(&curve)?, record));
    }
    Ok(Computed { metrics, curves_csv, pimo, timings })
}

fn cmd_compute(args: &ComputeArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    let ds = manifest.load_dataset()?;
    info!("loaded {} images ({} normal)", ds.samples().len(), ds.num_normal());
    let out = compute(&ds, &args.metrics)?;
    create_dir(&args.out)?;
    write_text(&args.out.join(METRICS_FILE), &to_json(&out.metrics))?;
    if let Some(csv) = &out.curves_csv {
        write_text(&args.out.join("curves.csv"), csv)?;
    }
    if let Some((csv, record)) = &out.pimo {
        write_text(&args.out.join("pimo.csv"), csv)?;
        save_score_file(&args.out.join(AUPIMO_FILE), record)?;
    }
    Ok(())
}

fn load_model(name: &str, dir: &Path) -> Result<ModelResults> {
    let record = load_score_file(&dir.join(AUPIMO_FILE))?;
    let path = dir.join(METRICS_FILE);
    let metrics: Option<MetricsFile> = match std::fs::read_to_string(&path) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| Error::SchemaViolation {
            path: path.display().to_string(),
            message: e.to_string(),
        })?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(Error::Io { path, source: e }),
    };
    Ok(ModelResults {
        name: name.to_string(),
        auroc: metrics.as_ref().and_then(|m| m.auroc),
        aupro: metrics.as_ref().and_then(|m| m.aupro),
        aupro_5pct: metrics.as_ref().and_then(|m| m.aupro_5pct),
        aupimo: record.ids().into_iter().zip(record.aupimos.iter().copied()).collect(),
    })
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let models = args
        .models
        .iter()
        .map(|(name, dir)| load_model(name, dir))
        .collect::<Result<Vec<_>>>()?;
    let report = emit_report(&models)?;
    for w in &report.warnings {
        warn!("{w}");
    }
    create_dir(&args.out)?;
    write_report_bundle(&args.out, &models, &report)
}

fn cmd_perturb(args: &PerturbArgs) -> Result<()> {
    let table = match &args.profile {
        Some(path) => TinyBlobTable::load(path)?,
        None => TinyBlobTable::visa(),
    };
    let profile: NoiseProfile = match &args.category {
        Some(name) => table.category_profile(name, args.seed)?,
        None => table.profile(args.seed)?,
    };
    let manifest = Manifest::load(&args.manifest)?;
    create_dir(&args.out)?;
    let mut entries = Vec::with_capacity(manifest.entries.len());
    let mut skipped = 0;
    for (i, entry) in manifest.entries.iter().enumerate() {
        let scores = std::path::absolute(manifest.score_path(entry))
            .map_err(|e| Error::Io { path: manifest.score_path(entry), source: e })?;
        let mask_path = manifest.mask_path(entry);
        let mask = pimo_core::io::load_mask(&mask_path, &entry.id)?;
        let mask_path = if mask.is_normal() {
            std::path::absolute(&mask_path).map_err(|e| Error::Io { path: mask_path, source: e })?
        } else {
            let noisy = synthesize_noisy_mask(&entry.id, &mask, &profile, i as u64)?;
            skipped += noisy.skipped.len();
            let rel = PathBuf::from("masks").join(format!("{}.png", entry.id));
            let dst = args.out.join(&rel);
            if let Some(parent) = dst.parent() {
                create_dir(parent)?;
            }
            save_mask_png(&dst, &noisy.mask)?;
            rel
        };
        entries.push(ManifestEntry { id: entry.id.clone(), scores, mask: mask_path });
    }
    if skipped > 0 {
        warn!("{skipped} blobs could not be placed");
    }
    Manifest::new(".", entries).save(&args.out.join("manifest.json"))
}

#[derive(Serialize)]
struct BenchReport {
    arch: &'static str,
    threads: usize,
    num_images: usize,
    height: usize,
    width: usize,
    num_thresholds: usize,
    seconds: Vec<(&'static str, f64)>,
    aupimo_over_aupro: Option<f64>,
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let ds = match &args.manifest {
        Some(path) => Manifest::load(path)?.load_dataset()?,
        None => synthetic_dataset(&SynthConfig {
            height: args.size,
            width: args.size,
            num_normal: args.normal,
            num_anomalous: args.anomalous,
            seed: args.seed,
            ..Default::default()
        })?,
    };
    let out = compute(&ds, &args.metrics)?;
    let time = |name: &str| out.timings.iter().find(|t| t.0 == name).map(|t| t.1);
    let first = &ds.samples()[0];
    let report = BenchReport {
        arch: std::env::consts::ARCH,
        threads: rayon::current_num_threads(),
        num_images: ds.samples().len(),
        height: first.height(),
        width: first.width(),
        num_thresholds: args.metrics.num_thresholds,
        aupimo_over_aupro: time("aupimo").zip(time("aupro")).map(|(a, b)| a / b),
        seconds: out.timings,
    };
    print!("{}", to_json(&report));
    Ok(())
}

fn cmd_heatmap(args: &HeatmapArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    let record = load_score_file(&args.scores)?;
    let ids = if args.ids.is_empty() { record.ids() } else { args.ids.clone() };
    create_dir(&args.out)?;
    for id in &ids {
        let entry = manifest.entry(id).ok_or_else(|| Error::UnknownModel(format!("image `{id}` not in manifest")))?;
        let sample = manifest.load_sample(entry)?;
        let img = render_heatmap(&sample, record.thresh_lower_bound, record.thresh_upper_bound);
        let dst = args.out.join(format!("{id}.png"));
        if let Some(parent) = dst.parent() {
            create_dir(parent)?;
        }
        save_heatmap_png(&dst, &img)?;
    }
    info!("rendered {} heatmaps", ids.len());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Compute(a) => cmd_compute(a),
        Command::Report(a) => cmd_report(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Heatmap(a) => cmd_heatmap(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error[Threads] sample=-: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}] sample={}: {e}", e.code(), e.sample_id().unwrap_or("-"));
            ExitCode::from(if e.is_metric_undefined() { 2 } else { 1 })
        }
    }
}
