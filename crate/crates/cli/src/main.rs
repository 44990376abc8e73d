//! `leaklab`: generate phantom trial sets, run the paired leakage
//! experiments, audit third-party split plans, and render reports.
//!
//! Exit codes: 0 ok, 2 usage/config, 3 I/O, 4 data/format, 5 internal
//! invariant, 10 leaky audit verdict.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use leaklab_core::{
    binarize_labels, generate_phantom, load_trialset, run_inflation_suite,
    run_segmentation_experiment, run_selection_experiment, run_tuning_experiment, save_trialset,
    summarize, verify_no_group_leakage, Error, ExperimentReport, Fold, PhantomConfig, RatingAxis,
    Scheme, SegExpConfig, SelExpConfig, SelMode, SplitPlan, SuiteConfig, TrialSet, TuneExpConfig,
    TuneMode,
};

#[derive(Parser)]
#[command(name = "leaklab", version, about = "Leakage-aware evaluation harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Master seed for anything random.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Directory the command writes into.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// JSON config file: either a plain config or a previous run's manifest
    /// (its resolved config is used). Individual flags still win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Suppress the stdout summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a phantom trial set and save it as a trial-set directory.
    Generate(GenerateArgs),
    /// Run one experiment (or the multi-seed suite) and write its report.
    Run(RunArgs),
    /// Check a train/test plan against group ids; exits 10 when leaky.
    Audit(AuditArgs),
    /// Re-render the Markdown and CSV digests of an existing report file.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Number of channels.
    #[arg(long)]
    channels: Option<usize>,
    /// Trial length in seconds.
    #[arg(long)]
    trial_seconds: Option<f64>,
    /// Sampling rate in Hz.
    #[arg(long)]
    sampling_rate: Option<f64>,
    /// Assign exactly half the trials to each label (the default).
    #[arg(long, conflicts_with = "unbalanced")]
    balanced: bool,
    /// Draw each label as an independent fair coin instead.
    #[arg(long)]
    unbalanced: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExpKind {
    Seg,
    Select,
    Tune,
    Suite,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Valence,
    Arousal,
    Dominance,
    Liking,
}

impl From<AxisArg> for RatingAxis {
    fn from(a: AxisArg) -> RatingAxis {
        match a {
            AxisArg::Valence => RatingAxis::Valence,
            AxisArg::Arousal => RatingAxis::Arousal,
            AxisArg::Dominance => RatingAxis::Dominance,
            AxisArg::Liking => RatingAxis::Liking,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Which experiment to run.
    #[arg(long, value_enum)]
    exp: ExpKind,
    /// Load a trial-set directory.
    #[arg(long, conflicts_with = "phantom")]
    data: Option<PathBuf>,
    /// Generate phantom data instead of loading any.
    #[arg(long)]
    phantom: bool,
    /// Run a single arm: global|local (select) or wrong|correct (tune).
    #[arg(long)]
    mode: Option<String>,
    /// Binarize loaded ratings on this axis (phantom data is pre-labeled).
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    /// Rating threshold for --axis: label 1 when rating > threshold.
    #[arg(long, default_value_t = 5.0)]
    threshold: f64,
    /// Suite only: number of independent seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Seg only: segment lengths in seconds, comma separated.
    #[arg(long, value_delimiter = ',')]
    segments: Option<Vec<f64>>,
}

#[derive(Args)]
struct AuditArgs {
    /// CSV with columns row_id,fold_id,side (side is train or test).
    #[arg(long)]
    plan: PathBuf,
    /// CSV with columns row_id,group_id.
    #[arg(long)]
    groups: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to an existing *.report.json.
    report: PathBuf,
}

/// Optional config-file sections; flags override whatever these set.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    phantom: Option<PhantomConfig>,
    seg: Option<SegExpConfig>,
    sel: Option<SelExpConfig>,
    tune: Option<TuneExpConfig>,
    suite: Option<SuiteConfig>,
}

#[derive(Serialize, Deserialize)]
struct RunManifest {
    command: String,
    tool_version: String,
    master_seed: u64,
    input_path: Option<PathBuf>,
    output_dir: PathBuf,
    /// Every default materialized; feed this file back via --config to
    /// reproduce the run bit-identically (timestamps aside).
    resolved_config: serde_json::Value,
    started_at_epoch_secs: u64,
    finished_at_epoch_secs: Option<u64>,
}

fn epoch_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Precondition(_) => 2,
        Error::Io { .. } => 3,
        Error::Data(_) | Error::Format { .. } | Error::Degenerate(_) => 4,
        Error::Internal(_) => 5,
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, Error> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::format(path, format!("not valid JSON: {e}")))?;
    if let Some(inner) = value.get("resolved_config") {
        value = inner.clone();
    }
    serde_json::from_value(value).map_err(|e| Error::format(path, format!("bad config: {e}")))
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Internal(format!("manifest serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_out_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<u8, Error> {
    let fc = load_file_config(cli.config.as_deref())?;
    let mut cfg = fc.phantom.unwrap_or_default();
    cfg.master_seed = cli.seed;
    if let Some(v) = args.trials {
        cfg.n_trials = v;
    }
    if let Some(v) = args.channels {
        cfg.n_channels = v;
    }
    if let Some(v) = args.trial_seconds {
        cfg.trial_seconds = v;
    }
    if let Some(v) = args.sampling_rate {
        cfg.sampling_rate_hz = v;
    }
    if args.balanced {
        cfg.balanced_labels = true;
    }
    if args.unbalanced {
        cfg.balanced_labels = false;
    }

    ensure_out_dir(&cli.out)?;
    let manifest_path = cli.out.join("manifest.json");
    let mut manifest = RunManifest {
        command: "generate".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        master_seed: cli.seed,
        input_path: None,
        output_dir: cli.out.clone(),
        resolved_config: serde_json::json!({ "phantom": cfg }),
        started_at_epoch_secs: epoch_secs(),
        finished_at_epoch_secs: None,
    };
    write_manifest(&manifest_path, &manifest)?;

    let ts = generate_phantom(&cfg)?;
    save_trialset(&ts, &cli.out)?;
    manifest.finished_at_epoch_secs = Some(epoch_secs());
    write_manifest(&manifest_path, &manifest)?;
    if !cli.quiet {
        println!(
            "wrote {} trials x {} channels x {:.0} s at {} Hz to {}",
            ts.n_trials(),
            ts.n_channels(),
            cfg.trial_seconds,
            cfg.sampling_rate_hz,
            cli.out.display()
        );
    }
    Ok(0)
}

fn load_run_data(
    cli: &Cli,
    args: &RunArgs,
    fc: &FileConfig,
) -> Result<(TrialSet, Option<PathBuf>), Error> {
    if args.phantom {
        if args.axis.is_some() {
            return Err(Error::Config {
                field: "axis",
                message: "phantom data is pre-labeled; --axis applies to loaded data only".into(),
            });
        }
        let mut cfg = fc.phantom.clone().unwrap_or_default();
        cfg.master_seed = cli.seed;
        return Ok((generate_phantom(&cfg)?, None));
    }
    let Some(dir) = &args.data else {
        return Err(Error::Config {
            field: "data",
            message: "pass --data <dir> or --phantom".into(),
        });
    };
    let ts = load_trialset(dir)?;
    let ts = match args.axis {
        Some(axis) => binarize_labels(&ts, axis.into(), args.threshold)?,
        None => ts,
    };
    Ok((ts, Some(dir.clone())))
}

fn parse_sel_mode(mode: &str) -> Result<SelMode, Error> {
    match mode {
        "global" => Ok(SelMode::Global),
        "local" => Ok(SelMode::Local),
        other => Err(Error::Config {
            field: "mode",
            message: format!("selection modes are global or local, got {other:?}"),
        }),
    }
}

fn parse_tune_mode(mode: &str) -> Result<TuneMode, Error> {
    match mode {
        "wrong" => Ok(TuneMode::Wrong),
        "correct" => Ok(TuneMode::Correct),
        other => Err(Error::Config {
            field: "mode",
            message: format!("tuning modes are wrong or correct, got {other:?}"),
        }),
    }
}

fn reject_flag(cond: bool, field: &'static str, message: &str) -> Result<(), Error> {
    if cond {
        return Err(Error::Config {
            field,
            message: message.into(),
        });
    }
    Ok(())
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> Result<u8, Error> {
    let fc = load_file_config(cli.config.as_deref())?;

    reject_flag(
        args.segments.is_some() && args.exp != ExpKind::Seg,
        "segments",
        "--segments only applies to --exp seg",
    )?;
    reject_flag(
        args.seeds.is_some() && args.exp != ExpKind::Suite,
        "seeds",
        "--seeds only applies to --exp suite",
    )?;
    reject_flag(
        args.mode.is_some() && !matches!(args.exp, ExpKind::Select | ExpKind::Tune),
        "mode",
        "--mode only applies to --exp select or tune",
    )?;

    // Resolve the experiment config first so the manifest written before any
    // compute already holds every materialized default.
    let (resolved_config, kind): (serde_json::Value, &str) = match args.exp {
        ExpKind::Seg => {
            let mut cfg = fc.seg.clone().unwrap_or_default();
            cfg.seed = cli.seed;
            if let Some(s) = &args.segments {
                cfg.segment_seconds = s.clone();
            }
            (serde_json::json!({ "seg": cfg }), "segmentation")
        }
        ExpKind::Select => {
            let mut cfg = fc.sel.clone().unwrap_or_default();
            if let Some(mode) = &args.mode {
                cfg.mode = Some(parse_sel_mode(mode)?);
            }
            (serde_json::json!({ "sel": cfg }), "selection")
        }
        ExpKind::Tune => {
            let mut cfg = fc.tune.clone().unwrap_or_default();
            if let Some(mode) = &args.mode {
                cfg.mode = Some(parse_tune_mode(mode)?);
            }
            (serde_json::json!({ "tune": cfg }), "tuning")
        }
        ExpKind::Suite => {
            reject_flag(
                args.data.is_some(),
                "data",
                "the suite draws fresh phantom data per seed; --data does not apply",
            )?;
            reject_flag(args.axis.is_some(), "axis", "the suite is phantom-only")?;
            reject_flag(
                !args.phantom,
                "phantom",
                "the suite draws fresh phantom data per seed; pass --phantom",
            )?;
            let mut cfg = fc.suite.clone().unwrap_or_default();
            cfg.master_seed = cli.seed;
            if let Some(n) = args.seeds {
                cfg.n_seeds = n;
            }
            if let Some(p) = fc.phantom.clone() {
                cfg.phantom = p;
            }
            if let Some(s) = fc.seg.clone() {
                cfg.seg = s;
            }
            if let Some(s) = fc.sel.clone() {
                cfg.sel = s;
            }
            if let Some(t) = fc.tune.clone() {
                cfg.tune = t;
            }
            (serde_json::json!({ "suite": cfg }), "suite")
        }
    };

    ensure_out_dir(&cli.out)?;
    let stem = format!("{kind}_{}", cli.seed);
    let manifest_path = cli.out.join(format!("{stem}.manifest.json"));
    let mut manifest = RunManifest {
        command: format!(
            "run --exp {}",
            match args.exp {
                ExpKind::Seg => "seg",
                ExpKind::Select => "select",
                ExpKind::Tune => "tune",
                ExpKind::Suite => "suite",
            }
        ),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        master_seed: cli.seed,
        input_path: args.data.clone(),
        output_dir: cli.out.clone(),
        resolved_config: resolved_config.clone(),
        started_at_epoch_secs: epoch_secs(),
        finished_at_epoch_secs: None,
    };
    write_manifest(&manifest_path, &manifest)?;

    let report: ExperimentReport = match args.exp {
        ExpKind::Seg => {
            let (ts, _) = load_run_data(cli, args, &fc)?;
            let cfg: SegExpConfig = serde_json::from_value(resolved_config["seg"].clone())
                .map_err(|e| Error::Internal(format!("config echo failed to round-trip: {e}")))?;
            run_segmentation_experiment(&ts, &cfg)?
        }
        ExpKind::Select => {
            let (ts, _) = load_run_data(cli, args, &fc)?;
            let cfg: SelExpConfig = serde_json::from_value(resolved_config["sel"].clone())
                .map_err(|e| Error::Internal(format!("config echo failed to round-trip: {e}")))?;
            run_selection_experiment(&ts, &cfg, cli.seed)?
        }
        ExpKind::Tune => {
            let (ts, _) = load_run_data(cli, args, &fc)?;
            let cfg: TuneExpConfig = serde_json::from_value(resolved_config["tune"].clone())
                .map_err(|e| Error::Internal(format!("config echo failed to round-trip: {e}")))?;
            run_tuning_experiment(&ts, &cfg, cli.seed)?
        }
        ExpKind::Suite => {
            let cfg: SuiteConfig = serde_json::from_value(resolved_config["suite"].clone())
                .map_err(|e| Error::Internal(format!("config echo failed to round-trip: {e}")))?;
            run_inflation_suite(&cfg)?
        }
    };

    if report.file_stem() != stem {
        return Err(Error::Internal(format!(
            "report stem {} does not match the announced {stem}",
            report.file_stem()
        )));
    }
    report.save(&cli.out.join(format!("{stem}.report.json")))?;
    let artifacts = summarize(&report);
    let md_path = cli.out.join(format!("{stem}.summary.md"));
    fs::write(&md_path, &artifacts.markdown).map_err(|e| Error::io(&md_path, e))?;
    for csv in &artifacts.csvs {
        let path = cli.out.join(format!("{stem}.{}.csv", csv.name));
        fs::write(&path, &csv.content).map_err(|e| Error::io(&path, e))?;
    }
    manifest.finished_at_epoch_secs = Some(epoch_secs());
    write_manifest(&manifest_path, &manifest)?;

    if !cli.quiet {
        print!("{}", artifacts.markdown);
    }
    Ok(0)
}

fn read_csv_rows(path: &Path, want_header: &[&str]) -> Result<Vec<Vec<String>>, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::format(path, e.to_string()),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got != want_header {
        return Err(Error::format(
            path,
            format!("expected header {want_header:?}, got {got:?}"),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok(rows)
}

fn parse_u64(path: &Path, field: &str, raw: &str) -> Result<u64, Error> {
    raw.parse::<u64>().map_err(|_| {
        Error::format(
            path,
            format!("{field} must be a non-negative integer, got {raw:?}"),
        )
    })
}

fn cmd_audit(cli: &Cli, args: &AuditArgs) -> Result<u8, Error> {
    let plan_rows = read_csv_rows(&args.plan, &["row_id", "fold_id", "side"])?;
    let group_rows = read_csv_rows(&args.groups, &["row_id", "group_id"])?;

    let mut groups_by_row: BTreeMap<u64, u64> = BTreeMap::new();
    for row in &group_rows {
        let id = parse_u64(&args.groups, "row_id", &row[0])?;
        let group = parse_u64(&args.groups, "group_id", &row[1])?;
        if groups_by_row.insert(id, group).is_some() {
            return Err(Error::Data(format!(
                "row {id} listed twice in the groups file"
            )));
        }
    }

    // fold -> (train ids, test ids)
    let mut folds: BTreeMap<u64, (Vec<u64>, Vec<u64>)> = BTreeMap::new();
    let mut plan_ids: BTreeSet<u64> = BTreeSet::new();
    for row in &plan_rows {
        let id = parse_u64(&args.plan, "row_id", &row[0])?;
        let fold = parse_u64(&args.plan, "fold_id", &row[1])?;
        plan_ids.insert(id);
        let entry = folds.entry(fold).or_default();
        match row[2].to_ascii_lowercase().as_str() {
            "train" => entry.0.push(id),
            "test" => entry.1.push(id),
            other => {
                return Err(Error::Data(format!(
                    "side must be train or test, got {other:?} for row {id}"
                )))
            }
        }
    }

    let group_ids_set: BTreeSet<u64> = groups_by_row.keys().copied().collect();
    if plan_ids != group_ids_set {
        let only_plan: Vec<u64> = plan_ids
            .difference(&group_ids_set)
            .take(5)
            .copied()
            .collect();
        let only_groups: Vec<u64> = group_ids_set
            .difference(&plan_ids)
            .take(5)
            .copied()
            .collect();
        return Err(Error::Data(format!(
            "row ids differ between the two files (plan-only: {only_plan:?}, groups-only: {only_groups:?})"
        )));
    }

    // dense, order-preserving remap so external ids need not be 0..n
    let dense: BTreeMap<u64, usize> = plan_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();
    let group_ids: Vec<u32> = groups_by_row.values().map(|&g| g as u32).collect();
    let folds: Vec<Fold> = folds
        .into_iter()
        .enumerate()
        .map(|(index, (_, (train, test)))| {
            let mut train: Vec<usize> = train.iter().map(|id| dense[id]).collect();
            let mut test: Vec<usize> = test.iter().map(|id| dense[id]).collect();
            train.sort_unstable();
            test.sort_unstable();
            Fold {
                index,
                train_rows: train,
                test_rows: test,
            }
        })
        .collect();
    let plan = SplitPlan {
        scheme: Scheme::External,
        n_rows: dense.len(),
        seed: None,
        folds,
    };

    let report = verify_no_group_leakage(&plan, &group_ids)?;
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Internal(format!("leakage report serialization failed: {e}")))?;
    text.push('\n');
    if !cli.quiet {
        print!("{text}");
    }
    Ok(if report.leaky { 10 } else { 0 })
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<u8, Error> {
    let report = ExperimentReport::load(&args.report)?;
    ensure_out_dir(&cli.out)?;
    let stem = report.file_stem();
    let artifacts = summarize(&report);
    let md_path = cli.out.join(format!("{stem}.summary.md"));
    fs::write(&md_path, &artifacts.markdown).map_err(|e| Error::io(&md_path, e))?;
    for csv in &artifacts.csvs {
        let path = cli.out.join(format!("{stem}.{}.csv", csv.name));
        fs::write(&path, &csv.content).map_err(|e| Error::io(&path, e))?;
    }
    if !cli.quiet {
        print!("{}", artifacts.markdown);
    }
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<u8, Error> {
    match &cli.cmd {
        Cmd::Generate(args) => cmd_generate(cli, args),
        Cmd::Run(args) => cmd_run(cli, args),
        Cmd::Audit(args) => cmd_audit(cli, args),
        Cmd::Report(args) => cmd_report(cli, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized; --jobs ignored");
        }
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
