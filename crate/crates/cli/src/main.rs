//! `weldforge` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 I/O
//! error, 4 planning, audit or generation failure. Every failure prints one
//! `error.kind=<kind> msg=<message>` line to stderr.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use weldforge::audit::{
    bins_csv, confidence_histogram, confusion_tally, domain_gap, filter_by_confidence, read_predictions, ClassMap,
    GapReport, HistogramReport, PredictionRecord,
};
use weldforge::augment::{augment_rgb8, sample_augment_spec, AugmentPolicy};
use weldforge::defect::DefectKind;
use weldforge::manifest::{write_atomic, Manifest, ParseMode, Source};
use weldforge::mixer::{
    materialize, proportional_sample, rebalance, subsample_pool, sweep_plans, MixConfig, MixPlan, Pools, SplitRequest,
    Strategy, Subsample, SweepAxis, SweepConfig, TargetRatio,
};
use weldforge::render::{generate_dataset, GenConfig, MANIFEST_FILE};
use weldforge::{Error, Result};

const THREADS_ENV: &str = "FORGE_THREADS";

#[derive(Parser)]
#[command(
    name = "weldforge",
    version,
    about = "Synthetic weld-defect datasets, mix planning and domain-gap audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the synthetic image grid and its manifest.
    Generate(GenerateArgs),
    /// Plan and materialize one train/val/test mix.
    Mix(MixArgs),
    /// Materialize a family of mixes that vary one source's training count.
    Sweep(SweepArgs),
    /// Rebalance the classes of a pool used as a training split.
    Rebalance(RebalanceArgs),
    /// Thin a pool by strata, location stride or fraction.
    Sample(SampleArgs),
    /// Score prediction CSVs and compare real against synthetic.
    Audit(AuditArgs),
    /// Render an audit directory as a table.
    Report(ReportArgs),
    /// Apply seeded training augmentations to an image or list their specs.
    Augment(AugmentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generation config JSON; defaults apply to omitted fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also render the minor-imperfection kind (labelled good).
    #[arg(long)]
    include_minor_imperfections: bool,
    /// Output image size, e.g. 640x400.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<(u32, u32)>,
}

#[derive(Args)]
struct PoolArgs {
    /// Real-image pool manifest.
    #[arg(long)]
    real: PathBuf,
    /// Synthetic-image pool manifest.
    #[arg(long)]
    synthetic: Option<PathBuf>,
}

#[derive(Args)]
struct MixArgs {
    #[command(flatten)]
    pools: PoolArgs,
    /// Mix config JSON (split sizes, optional rebalance and augment policy).
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    pools: PoolArgs,
    /// Source whose training count varies.
    #[arg(long)]
    axis: SweepAxis,
    /// Training count of the other source.
    #[arg(long)]
    fixed: usize,
    /// Comma-separated training counts for the varying source.
    #[arg(long, value_delimiter = ',', required = true)]
    steps: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long)]
    val: usize,
    #[arg(long)]
    test: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RebalanceArgs {
    /// Pool manifest treated as the training split.
    #[arg(long)]
    pool: PathBuf,
    /// Extra synthetic rows available to `synthetic-pad`.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long)]
    strategy: Strategy,
    /// Defect:good target, e.g. 7:3.
    #[arg(long, default_value = "7:3")]
    target_ratio: TargetRatio,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    pool: PathBuf,
    /// Comma-separated meta keys defining strata; requires --n.
    #[arg(long, value_delimiter = ',', requires = "n", conflicts_with_all = ["stride", "fraction"])]
    strata: Vec<String>,
    #[arg(long, requires = "strata")]
    n: Option<usize>,
    /// Keep rows whose location index is a multiple of k.
    #[arg(long, conflicts_with = "fraction")]
    stride: Option<u64>,
    /// Keep a seeded fraction of the rows.
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output manifest path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AuditArgs {
    /// Prediction CSV files; records are grouped by their source column.
    #[arg(long, num_args = 1.., required = true)]
    predictions: Vec<PathBuf>,
    #[arg(long)]
    classmap: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Most confident correct predictions listed per class.
    #[arg(long, default_value_t = 20)]
    top_n: usize,
    /// Also write `keep.txt`: ids of correct records at or above this confidence.
    #[arg(long)]
    keep_threshold: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Md,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `audit`.
    #[arg(long)]
    audit: PathBuf,
    #[arg(long, value_enum, default_value = "md")]
    format: ReportFormat,
}

#[derive(Args)]
struct AugmentArgs {
    /// Augment policy JSON; the default policy when omitted.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    epoch: u64,
    /// Image to augment; requires --id.
    #[arg(long, requires = "id", conflicts_with = "manifest")]
    image: Option<PathBuf>,
    /// Image id that keys the augmentation draw.
    #[arg(long)]
    id: Option<String>,
    /// Manifest whose rows get one spec each, written as JSONL.
    #[arg(long, required_unless_present = "image")]
    manifest: Option<PathBuf>,
    /// Output PNG (with --image) or spec JSONL (with --manifest).
    #[arg(long)]
    out: PathBuf,
}

fn parse_dims(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(w)?, parse(h)?))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Schema { .. } | Error::Contract(_) => 2,
        Error::Io { .. } => 3,
        Error::Planning(_) | Error::Audit(_) | Error::Generation(_) => 4,
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error.kind=config msg={}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error.kind={} msg={}", e.kind(), one_line(&e.to_string()));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Mix(a) => cmd_mix(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Rebalance(a) => cmd_rebalance(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Report(a) => cmd_report(a),
        Command::Augment(a) => cmd_augment(a),
    }
}

fn env_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_atomic(path, text.as_bytes())
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

/// Reads a pool manifest and rewrites relative image paths against the
/// manifest's directory, so materialized outputs point at real files.
fn read_pool(path: &Path) -> Result<Manifest> {
    let mut m = Manifest::read(path, ParseMode::Strict)?;
    m.resolve_paths(path.parent().unwrap_or(Path::new("")));
    Ok(m)
}

fn load_pools(args: &PoolArgs) -> Result<(Manifest, Manifest)> {
    let real = read_pool(&args.real)?;
    let synthetic = match &args.synthetic {
        Some(p) => read_pool(p)?,
        None => Manifest::default(),
    };
    Ok((real, synthetic))
}

fn label_counts(m: &Manifest) -> (usize, usize) {
    let defect = m.rows.iter().filter(|r| r.label == 0).count();
    (defect, m.len() - defect)
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => GenConfig::from_json(&read_text(p)?)?,
        None => GenConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.master_seed = seed;
    }
    if let Some(dims) = a.dims {
        config.output_dims = dims;
    }
    if a.include_minor_imperfections && !config.kinds.contains(&DefectKind::MinorImperfection) {
        config.kinds.push(DefectKind::MinorImperfection);
    }
    config.output_dir = a.out.clone();
    config.workers = env_threads()?;
    let started = std::time::Instant::now();
    let manifest = generate_dataset(&config)?;
    let secs = started.elapsed().as_secs_f64();

    println!(
        "{} images in {:.1}s ({:.1} images/min) -> {}",
        manifest.len(),
        secs,
        manifest.len() as f64 * 60.0 / secs.max(1e-9),
        a.out.join(MANIFEST_FILE).display()
    );
    let (defect, good) = label_counts(&manifest);
    println!("class defect: {defect}");
    println!("class good: {good}");
    let mut per_material: BTreeMap<String, usize> = BTreeMap::new();
    for r in &manifest.rows {
        *per_material
            .entry(r.meta_str("material").unwrap_or_default())
            .or_default() += 1;
    }
    for (m, n) in per_material {
        println!("material {m}: {n}");
    }
    Ok(())
}

fn print_plan(plan: &MixPlan) {
    let c = plan.counts();
    for (name, s) in [("train", c.train), ("val", c.val), ("test", c.test)] {
        println!(
            "{name}: {} rows (real {}, synthetic {}; defect {}, good {})",
            s.total(),
            s.real(),
            s.synthetic(),
            s.label(0),
            s.label(1)
        );
    }
}

fn cmd_mix(a: MixArgs) -> Result<()> {
    let config = MixConfig::from_json(&read_text(&a.plan)?)?;
    let (real, synthetic) = load_pools(&a.pools)?;
    let pools = Pools {
        real: &real,
        synthetic: &synthetic,
    };
    let plan = config.plan(pools, a.seed)?;
    materialize(&plan, pools, &a.out)?;
    print_plan(&plan);
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let config = SweepConfig {
        axis: a.axis,
        fixed_count: a.fixed,
        steps: a.steps,
        repeats: a.repeats,
    };
    let base = SplitRequest {
        real_train: 0,
        syn_train: 0,
        val: a.val,
        test: a.test,
    };
    let (real, synthetic) = load_pools(&a.pools)?;
    let pools = Pools {
        real: &real,
        synthetic: &synthetic,
    };
    let points = sweep_plans(&config, base, pools, a.seed)?;
    let mut index = Vec::new();
    for p in &points {
        let dir = format!("step_{:05}_repeat_{:02}", p.step, p.repeat);
        materialize(&p.plan, pools, &a.out.join(&dir))?;
        let c = p.plan.counts();
        index.push(json!({
            "dir": dir,
            "step": p.step,
            "repeat": p.repeat,
            "real_train": c.train.real(),
            "syn_train": c.train.synthetic(),
            "val": c.val.total(),
            "test": c.test.total(),
        }));
        println!(
            "{dir}: train {} (real {}, synthetic {})",
            c.train.total(),
            c.train.real(),
            c.train.synthetic()
        );
    }
    write_text(
        &a.out.join("sweep.json"),
        &pretty(&json!({"config": config, "seed": a.seed, "points": index})),
    )?;
    println!("{} plans", points.len());
    Ok(())
}

fn cmd_rebalance(a: RebalanceArgs) -> Result<()> {
    let pool = read_pool(&a.pool)?;
    let (mut real, mut synthetic) = (Manifest::default(), Manifest::default());
    for r in &pool.rows {
        match r.source {
            Source::Real => real.rows.push(r.clone()),
            Source::Synthetic => synthetic.rows.push(r.clone()),
        }
    }
    if let Some(extra) = &a.synthetic {
        let extra = read_pool(extra)?;
        let known: std::collections::HashSet<String> = synthetic.rows.iter().map(|r| r.id.clone()).collect();
        synthetic
            .rows
            .extend(extra.rows.into_iter().filter(|r| !known.contains(&r.id)));
    }
    let (real, synthetic) = (Manifest::new(real.rows)?, Manifest::new(synthetic.rows)?);
    let pools = Pools {
        real: &real,
        synthetic: &synthetic,
    };
    let plan = rebalance(
        &MixPlan::whole_pool(&pool, a.seed),
        pools,
        a.strategy,
        a.target_ratio,
        a.seed,
    )?;
    let out = materialize(&plan, pools, &a.out)?;
    let (defect, good) = label_counts(&out.train);
    let mass = |label: u8| {
        out.train
            .rows
            .iter()
            .filter(|r| r.label == label)
            .map(|r| r.weight)
            .sum::<f64>()
    };
    println!(
        "strategy {}: {} rows, defect {defect}, good {good}",
        a.strategy,
        out.train.len()
    );
    println!(
        "achieved ratio {:.4} by count, {:.4} by weight (target {} = {:.4})",
        defect as f64 / good.max(1) as f64,
        mass(0) / mass(1).max(f64::MIN_POSITIVE),
        a.target_ratio,
        a.target_ratio.defect as f64 / a.target_ratio.good as f64
    );
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let pool = Manifest::read(&a.pool, ParseMode::Strict)?;
    let picked = match (a.n, a.stride, a.fraction) {
        (Some(n), None, None) => proportional_sample(&pool, &a.strata, n, a.seed)?,
        (None, Some(k), None) => subsample_pool(&pool, Subsample::Stride(k), a.seed)?,
        (None, None, Some(f)) => subsample_pool(&pool, Subsample::Fraction(f), a.seed)?,
        _ => {
            return Err(Error::Config(
                "choose exactly one of --strata/--n, --stride or --fraction".into(),
            ))
        }
    };
    write_text(&a.out, &picked.to_jsonl())?;
    println!("{} of {} rows", picked.len(), pool.len());
    if !a.strata.is_empty() {
        let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        for r in &picked.rows {
            let key = a.strata.iter().map(|k| r.meta_str(k).unwrap_or_default()).collect();
            *counts.entry(key).or_default() += 1;
        }
        for (key, n) in counts {
            println!("{}: {n}", key.join("/"));
        }
    } else {
        let (defect, good) = label_counts(&picked);
        println!("defect: {defect}");
        println!("good: {good}");
    }
    Ok(())
}

const GAP_FILE: &str = "gap.json";
const BINS_FILE: &str = "bins.csv";
const CONFUSION_FILE: &str = "confusion.json";
const KEEP_FILE: &str = "keep.txt";

fn histogram_file(source: Source) -> String {
    format!("histogram_{source}.json")
}

fn cmd_audit(a: AuditArgs) -> Result<()> {
    let classmap = ClassMap::read(&a.classmap)?;
    let mut by_source: BTreeMap<Source, Vec<PredictionRecord>> = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    for path in &a.predictions {
        for rec in read_predictions(path)? {
            if !seen.insert((rec.source, rec.image_id.clone())) {
                return Err(Error::Config(format!(
                    "{}: image {} already scored in an earlier file",
                    path.display(),
                    rec.image_id
                )));
            }
            by_source.entry(rec.source).or_default().push(rec);
        }
    }
    if by_source.is_empty() {
        return Err(Error::Audit("no prediction records to audit".into()));
    }
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;

    let mut reports: Vec<(Source, HistogramReport)> = Vec::new();
    let mut confusion = serde_json::Map::new();
    for (source, records) in &by_source {
        let report = confidence_histogram(records, &classmap)?;
        write_text(&a.out.join(histogram_file(*source)), &pretty(&report))?;
        confusion.insert(
            source.to_string(),
            serde_json::to_value(confusion_tally(records, &classmap, a.top_n)?).expect("tally serializes"),
        );
        println!(
            "{source}: {} of {} top-3 correct ({:.4})",
            report.n_correct,
            report.n_total,
            report.correct_rate()
        );
        reports.push((*source, report));
    }
    let named: Vec<(&str, &HistogramReport)> = reports.iter().map(|(s, r)| (s.name(), r)).collect();
    write_text(&a.out.join(BINS_FILE), &bins_csv(&named)?)?;
    write_text(&a.out.join(CONFUSION_FILE), &pretty(&Value::Object(confusion)))?;

    let gap_path = a.out.join(GAP_FILE);
    match (
        by_source.contains_key(&Source::Real),
        by_source.contains_key(&Source::Synthetic),
    ) {
        (true, true) => {
            let gap = domain_gap(&reports[0].1, &reports[1].1)?;
            write_text(&gap_path, &pretty(&gap))?;
            println!("delta correct rate {:.4}", gap.delta_correct_rate);
        }
        _ => {
            if gap_path.exists() {
                fs::remove_file(&gap_path).map_err(|e| Error::io(&gap_path, e))?;
            }
            println!("gap skipped: needs both real and synthetic records");
        }
    }

    if let Some(t) = a.keep_threshold {
        let all: Vec<PredictionRecord> = by_source.into_values().flatten().collect();
        let keep = filter_by_confidence(&all, &classmap, t)?;
        let text: String = keep.iter().map(|id| format!("{id}\n")).collect();
        write_text(&a.out.join(KEEP_FILE), &text)?;
        println!("kept {} ids at confidence >= {t}", keep.len());
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        line: e.line() as u64,
        msg: e.to_string(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let mut reports: Vec<(Source, HistogramReport)> = Vec::new();
    for source in [Source::Real, Source::Synthetic] {
        let p = a.audit.join(histogram_file(source));
        if p.exists() {
            reports.push((source, read_json(&p)?));
        }
    }
    if reports.is_empty() {
        return Err(Error::Audit(format!("{} holds no histogram files", a.audit.display())));
    }
    let gap_path = a.audit.join(GAP_FILE);
    let gap: Option<GapReport> = if gap_path.exists() {
        Some(read_json(&gap_path)?)
    } else {
        None
    };
    let gap_rows = gap.map(|g| {
        vec![
            ("delta_correct_rate", Some(g.delta_correct_rate)),
            ("delta_mean", g.delta_mean),
            ("delta_skewness", g.delta_skewness),
            ("delta_q1", g.delta_q1),
            ("delta_q3", g.delta_q3),
            ("ks_distance", g.ks_distance),
        ]
    });

    match a.format {
        ReportFormat::Csv => {
            let named: Vec<(&str, &HistogramReport)> = reports.iter().map(|(s, r)| (s.name(), r)).collect();
            print!("{}", bins_csv(&named)?);
            if let Some(rows) = gap_rows {
                println!();
                println!("metric,value");
                for (k, v) in rows {
                    println!("{k},{}", v.map_or(String::new(), |x| x.to_string()));
                }
            }
        }
        ReportFormat::Md => {
            let names: Vec<&str> = reports.iter().map(|(s, _)| s.name()).collect();
            println!("| bin | {} |", names.join(" | "));
            println!("|---|{}", "---:|".repeat(names.len()));
            let (width, bins) = (reports[0].1.bin_width, reports[0].1.counts.len());
            for i in 0..bins {
                let cells: Vec<String> = reports.iter().map(|(_, r)| r.counts[i].to_string()).collect();
                println!(
                    "| {:.2}-{:.2} | {} |",
                    i as f64 * width,
                    (i + 1) as f64 * width,
                    cells.join(" | ")
                );
            }
            println!();
            println!("| statistic | {} |", names.join(" | "));
            println!("|---|{}", "---:|".repeat(names.len()));
            let stat_rows: [(&str, fn(&HistogramReport) -> String); 7] = [
                ("correct / total", |r| format!("{} / {}", r.n_correct, r.n_total)),
                ("correct rate", |r| format!("{:.4}", r.correct_rate())),
                ("mean", |r| fmt_opt(r.stats.mean)),
                ("median", |r| fmt_opt(r.stats.median)),
                ("q1", |r| fmt_opt(r.stats.q1)),
                ("q3", |r| fmt_opt(r.stats.q3)),
                ("skewness", |r| fmt_opt(r.stats.skewness)),
            ];
            for (name, f) in stat_rows {
                let cells: Vec<String> = reports.iter().map(|(_, r)| f(r)).collect();
                println!("| {name} | {} |", cells.join(" | "));
            }
            if let Some(rows) = gap_rows {
                println!();
                println!("| gap (real - synthetic) | value |");
                println!("|---|---:|");
                for (k, v) in rows {
                    println!("| {k} | {} |", fmt_opt(v));
                }
            }
        }
    }
    Ok(())
}

fn cmd_augment(a: AugmentArgs) -> Result<()> {
    let policy = match &a.policy {
        Some(p) => {
            let policy: AugmentPolicy = read_json(p)?;
            policy.validate()?;
            policy
        }
        None => AugmentPolicy::default(),
    };
    if let Some(path) = &a.image {
        let id = a.id.as_deref().expect("clap requires --id with --image");
        let img = image::open(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            .to_rgb8();
        let spec = sample_augment_spec(&policy, a.seed, a.epoch, id);
        let out = augment_rgb8(&img, &spec);
        if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let bytes = weldforge::render::encode_png(&out)?;
        write_atomic(&a.out, &bytes)?;
        println!("{}", serde_json::to_string(&spec).expect("spec serializes"));
    } else {
        let manifest = Manifest::read(a.manifest.as_deref().expect("clap requires --manifest"), ParseMode::Lax)?;
        let mut text = String::new();
        for r in &manifest.rows {
            let spec = sample_augment_spec(&policy, a.seed, a.epoch, &r.id);
            text += &serde_json::to_string(&json!({"image_id": r.id, "epoch": a.epoch, "spec": spec}))
                .expect("spec serializes");
            text.push('\n');
        }
        write_text(&a.out, &text)?;
        println!("{} specs", manifest.len());
    }
    Ok(())
}
