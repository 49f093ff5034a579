use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use backfire_core::calibration::{train, CalibratedWeights, TrainingConfig};
use backfire_core::experiments::{compare, label_projects, run_all, run_experiment, LabeledProject};
use backfire_core::io::{self, SyntheticSpec};
use backfire_core::{
    backfire, infer_ratio, resolve_language_level, reverse_backfire, FuzzyLevelSet,
    ProgrammingTable,
};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Backfiring conversion ratios per fuzzy language level, with calibration.
#[derive(Debug, Parser)]
#[command(name = "backfire", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert function points to SLOC or back.
    Estimate(EstimateArgs),
    /// Print the programming table or the (calibrated) fuzzy level table.
    Table(TableArgs),
    /// Calibrate per-level ratios from a project dataset.
    Calibrate(CalibrateArgs),
    /// MMRE/MMER/PRED of default (and calibrated) ratios on a dataset.
    Evaluate(EvaluateArgs),
    /// Run the train/test experiments and write the summary table.
    Experiment(ExperimentArgs),
    /// Emit (language level, SLOC/FP) points for plotting.
    Curve(CurveArgs),
    /// Write a synthetic project dataset.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Programming table CSV (name,level,low,mean,high); built-in table if omitted.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// Fuzzy level CSV (index,range_low,range_high,avg_ratio[,clamp_min,clamp_max]).
    #[arg(long, value_name = "FILE")]
    levels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainingArgs {
    #[arg(long, default_value_t = TrainingConfig::default().learning_rate)]
    eta: f64,
    #[arg(long, default_value_t = TrainingConfig::default().max_epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainingConfig::default().error_goal)]
    error_goal: f64,
    /// Seed of the per-epoch visiting order.
    #[arg(long, default_value_t = TrainingConfig::default().rng_seed)]
    seed: u64,
    /// Visit records in file order every epoch.
    #[arg(long)]
    no_shuffle: bool,
    /// Multiply each update by the project's UFP.
    #[arg(long)]
    scale_by_ufp: bool,
}

impl TrainingArgs {
    fn config(&self) -> TrainingConfig {
        TrainingConfig {
            learning_rate: self.eta,
            max_epochs: self.epochs,
            error_goal: self.error_goal,
            rng_seed: self.seed,
            shuffle_each_epoch: !self.no_shuffle,
            scale_update_by_ufp: self.scale_by_ufp,
        }
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("lang").required(true).args(["language", "level"])))]
#[command(group(clap::ArgGroup::new("size").required(true).args(["fp", "sloc"])))]
struct EstimateArgs {
    #[arg(long)]
    language: Option<String>,
    /// Language level instead of a named language.
    #[arg(long)]
    level: Option<f64>,
    /// Function points to convert to SLOC.
    #[arg(long)]
    fp: Option<f64>,
    /// SLOC to convert to function points.
    #[arg(long)]
    sloc: Option<f64>,
    /// Calibrated weights file; default ratios if omitted.
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Print the programming-language table instead of fuzzy levels.
    #[arg(long, conflicts_with = "weights")]
    programming: bool,
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    training: TrainingArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("which").required(true).args(["id", "all"])))]
struct ExperimentArgs {
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7))]
    id: Option<u8>,
    #[arg(long)]
    all: bool,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write each experiment's weights next to the report.
    #[arg(long)]
    save_weights: bool,
    #[command(flatten)]
    training: TrainingArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    per_level: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw every level's true ratio uniformly inside its clamp bounds with this seed.
    #[arg(long)]
    drift_seed: Option<u64>,
    #[command(flatten)]
    config: ConfigArgs,
}

struct Setup {
    table: ProgrammingTable,
    levels: FuzzyLevelSet,
}

impl ConfigArgs {
    fn load(&self) -> Result<Setup> {
        let table = backfire_core::load_programming_table(self.table.as_deref())
            .with_context(|| describe(self.table.as_deref(), "programming table"))?;
        let levels = match &self.levels {
            Some(p) => FuzzyLevelSet::from_path(p, &table)
                .with_context(|| describe(Some(p), "fuzzy levels"))?,
            None => FuzzyLevelSet::default(),
        };
        Ok(Setup { table, levels })
    }
}

fn describe(path: Option<&Path>, what: &str) -> String {
    match path {
        Some(p) => format!("reading {what} {}", p.display()),
        None => format!("loading built-in {what}"),
    }
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

fn load_weights(path: &Path, levels: &FuzzyLevelSet) -> Result<CalibratedWeights> {
    let weights = io::read_weights_path(path).with_context(|| format!("reading weights {}", path.display()))?;
    weights
        .check_levels(levels)
        .with_context(|| format!("weights {} do not match the fuzzy levels", path.display()))?;
    Ok(weights)
}

fn load_dataset(path: &Path, setup: &Setup) -> Result<Vec<LabeledProject>> {
    let records = io::read_projects_path(path).with_context(|| format!("reading dataset {}", path.display()))?;
    label_projects(&records, &setup.table, &setup.levels)
        .with_context(|| format!("mapping languages of {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Provenance lines shared by the banner and file headers.
fn provenance(inputs: &[(&str, &Path)], extra: &[String]) -> Result<Vec<String>> {
    let mut lines = vec![format!("backfire {VERSION}")];
    lines.extend(extra.iter().cloned());
    for (name, path) in inputs {
        lines.push(format!("{name}_sha256={}", file_hash(path)?));
    }
    Ok(lines)
}

fn banner(lines: &[String]) {
    for line in lines {
        eprintln!("# {line}");
    }
}

fn training_line(c: &TrainingConfig) -> String {
    format!(
        "eta={} epochs={} error_goal={} seed={} shuffle={} scale_by_ufp={}",
        c.learning_rate, c.max_epochs, c.error_goal, c.rng_seed, c.shuffle_each_epoch, c.scale_update_by_ufp
    )
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let setup = args.config.load()?;
    let language_level = match (&args.language, args.level) {
        (Some(name), _) => resolve_language_level(&setup.table, name)?,
        (None, Some(level)) => level,
        (None, None) => unreachable!("clap requires one of --language/--level"),
    };
    let peaks = match &args.weights {
        Some(p) => load_weights(p, &setup.levels)?.weights,
        None => setup.levels.averages(),
    };
    let ratio = infer_ratio(&setup.levels, &peaks, language_level)?;
    match (args.fp, args.sloc) {
        (Some(fp), None) => println!("{:.2} SLOC (ratio {ratio:.2} SLOC/FP)", backfire(fp, ratio)?),
        (None, Some(sloc)) => println!("{:.2} FP (ratio {ratio:.2} SLOC/FP)", reverse_backfire(sloc, ratio)?),
        _ => unreachable!("clap requires exactly one of --fp/--sloc"),
    }
    Ok(())
}

fn table(args: &TableArgs) -> Result<()> {
    let setup = args.config.load()?;
    let text = if args.programming {
        setup.table.to_csv_string()
    } else if let Some(p) = &args.weights {
        let weights = load_weights(p, &setup.levels)?;
        backfire_core::calibrated_conversion_table(&setup.levels, &weights)?.to_csv_string()
    } else {
        setup.levels.to_csv_string()
    };
    write_out(args.out.as_deref(), &text)
}

fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let setup = args.config.load()?;
    let config = args.training.config();
    let lines = provenance(&[("data", &args.data)], &[training_line(&config)])?;
    banner(&lines);
    let dataset = load_dataset(&args.data, &setup)?;
    let records: Vec<_> = dataset.iter().map(LabeledProject::training_record).collect();
    let weights = train(&records, &setup.levels, &config)?;
    let text = io::write_weights_csv(&weights, &setup.levels)?;
    let header: String = lines.iter().map(|l| format!("# {l}\n")).collect();
    fs::write(&args.out, header + &text).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "epochs run: {}, final epoch error: {:.6}",
        weights.epochs_run, weights.final_epoch_error
    );
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let setup = args.config.load()?;
    let mut inputs = vec![("data", args.data.as_path())];
    if let Some(w) = &args.weights {
        inputs.push(("weights", w.as_path()));
    }
    banner(&provenance(&inputs, &[])?);
    let dataset = load_dataset(&args.data, &setup)?;
    let weights = match &args.weights {
        Some(p) => load_weights(p, &setup.levels)?,
        None => CalibratedWeights::initial(&setup.levels, TrainingConfig::default()),
    };
    let (baseline, calibrated) = compare(&setup.levels, &weights, &dataset)?;
    let mut text = String::from("model,n,mmre,mmer,pred25,pred50\n");
    let mut rows = vec![("default", baseline)];
    if args.weights.is_some() {
        rows.push(("calibrated", calibrated));
    }
    for (name, r) in rows {
        let _ = writeln!(text, "{name},{},{},{},{},{}", r.n, r.mmre, r.mmer, r.pred25, r.pred50);
    }
    write_out(args.out.as_deref(), &text)
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    let setup = args.config.load()?;
    let config = args.training.config();
    let lines = provenance(
        &[("data", &args.data)],
        &[
            training_line(&config),
            "split_seeds=1:1 2:2 5:5 6:6".to_string(),
        ],
    )?;
    banner(&lines);
    let dataset = load_dataset(&args.data, &setup)?;
    let results = match args.id {
        Some(id) => vec![run_experiment(usize::from(id), &dataset, &setup.levels, &config)?],
        None => run_all(&dataset, &setup.levels, &config)?,
    };
    let rows: Vec<_> = results.iter().map(|r| r.improvement.clone()).collect();
    fs::write(&args.out, io::write_report_csv(&rows, &lines))
        .with_context(|| format!("writing {}", args.out.display()))?;
    if args.save_weights {
        for r in &results {
            let path = args.out.with_extension(format!("exp{}.weights.csv", r.experiment_id));
            fs::write(&path, io::write_weights_csv(&r.weights, &setup.levels)?)
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    for r in &rows {
        let i = &r.improvement;
        println!(
            "experiment {}: train {} test {} | MMRE {:+.2} MMER {:+.2} PRED25 {:+.2} PRED50 {:+.2}",
            r.experiment_id, r.training_samples, r.test_samples, i.mmre, i.mmer, i.pred25, i.pred50
        );
    }
    Ok(())
}

fn curve(args: &CurveArgs) -> Result<()> {
    let setup = args.config.load()?;
    let peaks = match &args.weights {
        Some(p) => load_weights(p, &setup.levels)?.weights,
        None => setup.levels.averages(),
    };
    let points = io::emit_curve(&setup.levels, &peaks)?;
    write_out(args.out.as_deref(), &io::write_curve_csv(&points))
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let setup = args.config.load()?;
    if args.per_level == 0 {
        bail!("--per-level must be at least 1");
    }
    let spec = SyntheticSpec {
        per_level_count: args.per_level,
        noise_fraction: args.noise,
        true_ratios: args
            .drift_seed
            .map(|s| io::random_true_ratios(&setup.levels, s))
            .unwrap_or_default(),
        seed: args.seed,
        ..SyntheticSpec::default()
    };
    let records = io::generate_synthetic_dataset(&setup.levels, &spec)?;
    fs::write(&args.out, io::write_projects_csv(&records))
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("wrote {} projects to {}", records.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Table(a) => table(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Curve(a) => curve(a),
        Command::Generate(a) => generate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
