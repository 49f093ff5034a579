//! The seven train/evaluate protocols comparing initial and calibrated ratios.
//!
//! | id | training split                         | test split        |
//! |----|----------------------------------------|-------------------|
//! | 1  | 50% per level, seed 1                  | remaining 50%     |
//! | 2  | 50% per level, seed 2                  | remaining 50%     |
//! | 3  | larger-UFP half of every level         | smaller-UFP half  |
//! | 4  | smaller-UFP half of every level        | larger-UFP half   |
//! | 5  | 75% per level, seed 5                  | remaining 25%     |
//! | 6  | 75% per level, seed 6                  | remaining 25%     |
//! | 7  | everything                             | everything        |
//!
//! Both models predict through fuzzy inference at the project's language
//! level; they differ only in the output peaks (initial averages versus
//! calibrated weights).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calibration::{train, CalibratedWeights, TrainingConfig, TrainingRecord};
use crate::domain::{resolve_language_level, ProgrammingTable, ProjectRecord};
use crate::error::{Error, Result};
use crate::fuzzy::{fuzzify, FuzzyLevelSet, OutputSets, GRID_POINTS};
use crate::metrics::{evaluate, improvement, EvaluationReport, ImprovementRow};

pub const EXPERIMENT_IDS: std::ops::RangeInclusive<usize> = 1..=7;

/// A project resolved to its language level and crisp fuzzy level.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledProject {
    pub record: ProjectRecord,
    pub language_level: f64,
    /// 1-based.
    pub level_index: usize,
}

impl LabeledProject {
    pub fn training_record(&self) -> TrainingRecord {
        TrainingRecord {
            id: self.record.id.clone(),
            level_index: self.level_index,
            ufp: self.record.ufp,
            sloc: self.record.sloc,
        }
    }
}

/// Maps every record's language to a level; the first unresolvable record
/// aborts with its id.
pub fn label_projects(
    records: &[ProjectRecord],
    table: &ProgrammingTable,
    levels: &FuzzyLevelSet,
) -> Result<Vec<LabeledProject>> {
    records
        .iter()
        .map(|r| {
            let wrap = |e: Error| Error::InvalidRecord {
                id: r.id.clone(),
                message: e.to_string(),
            };
            let language_level = resolve_language_level(table, &r.language).map_err(wrap)?;
            let level_index = levels.assign(language_level).map_err(wrap)?;
            Ok(LabeledProject {
                record: r.clone(),
                language_level,
                level_index,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainSide {
    Large,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitKind {
    RandomStratified { train_fraction: f64, seed: u64 },
    SizeBased { train_side: TrainSide },
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub kind: SplitKind,
}

impl SplitSpec {
    pub fn for_experiment(id: usize) -> Result<Self> {
        let kind = match id {
            1 | 2 => SplitKind::RandomStratified {
                train_fraction: 0.5,
                seed: id as u64,
            },
            3 => SplitKind::SizeBased {
                train_side: TrainSide::Large,
            },
            4 => SplitKind::SizeBased {
                train_side: TrainSide::Small,
            },
            5 | 6 => SplitKind::RandomStratified {
                train_fraction: 0.75,
                seed: id as u64,
            },
            7 => SplitKind::Full,
            _ => return Err(Error::UnknownExperiment(id)),
        };
        Ok(Self { kind })
    }

    pub fn seed(&self) -> Option<u64> {
        match self.kind {
            SplitKind::RandomStratified { seed, .. } => Some(seed),
            _ => None,
        }
    }

    pub fn apply(&self, dataset: &[LabeledProject]) -> Result<(Vec<LabeledProject>, Vec<LabeledProject>)> {
        match self.kind {
            SplitKind::RandomStratified { train_fraction, seed } => {
                split_random_stratified(dataset, train_fraction, seed)
            }
            SplitKind::SizeBased { train_side } => split_by_size(dataset, train_side),
            SplitKind::Full => {
                if dataset.is_empty() {
                    return Err(Error::EmptyDataset);
                }
                Ok((dataset.to_vec(), dataset.to_vec()))
            }
        }
    }
}

/// Dataset positions grouped by fuzzy level, each group in dataset order.
fn by_level(dataset: &[LabeledProject]) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, p) in dataset.iter().enumerate() {
        groups.entry(p.level_index).or_default().push(i);
    }
    groups
}

fn partition(dataset: &[LabeledProject], mut train_idx: Vec<usize>) -> (Vec<LabeledProject>, Vec<LabeledProject>) {
    train_idx.sort_unstable();
    let mut in_train = vec![false; dataset.len()];
    for &i in &train_idx {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = dataset
        .iter()
        .zip(in_train)
        .partition(|(_, t)| *t);
    (
        train.into_iter().map(|(p, _)| p.clone()).collect(),
        test.into_iter().map(|(p, _)| p.clone()).collect(),
    )
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Per level, `round_half_up(fraction × count)` randomly chosen records
/// train; the rest test. Both halves keep dataset order.
pub fn split_random_stratified(
    dataset: &[LabeledProject],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledProject>, Vec<LabeledProject>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("train fraction must lie in (0, 1), got {fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    for (_, mut members) in by_level(dataset) {
        let take = round_half_up(fraction * members.len() as f64).min(members.len());
        members.shuffle(&mut rng);
        train_idx.extend_from_slice(&members[..take]);
    }
    Ok(partition(dataset, train_idx))
}

/// Per level, records ordered by (UFP, id) split at the median; the side
/// that trains receives `ceil(count / 2)` records.
pub fn split_by_size(
    dataset: &[LabeledProject],
    train_side: TrainSide,
) -> Result<(Vec<LabeledProject>, Vec<LabeledProject>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut train_idx = Vec::new();
    for (_, mut members) in by_level(dataset) {
        members.sort_by(|&a, &b| {
            let (ra, rb) = (&dataset[a].record, &dataset[b].record);
            ra.ufp.total_cmp(&rb.ufp).then_with(|| ra.id.cmp(&rb.id))
        });
        let take = members.len().div_ceil(2);
        match train_side {
            TrainSide::Large => train_idx.extend_from_slice(&members[members.len() - take..]),
            TrainSide::Small => train_idx.extend_from_slice(&members[..take]),
        }
    }
    Ok(partition(dataset, train_idx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub experiment_id: usize,
    pub split: SplitSpec,
    pub weights: CalibratedWeights,
    pub baseline_report: EvaluationReport,
    pub calibrated_report: EvaluationReport,
    pub improvement: ImprovementRow,
}

/// Size predictions for `projects` with the given output peaks.
pub fn predict_sizes(levels: &FuzzyLevelSet, peaks: &[f64], projects: &[LabeledProject]) -> Result<Vec<f64>> {
    let sets = OutputSets::new(levels, peaks, GRID_POINTS)?;
    projects
        .iter()
        .map(|p| {
            let mu = fuzzify(levels, p.language_level)?;
            Ok(p.record.ufp * sets.centroid(&mu, GRID_POINTS)?)
        })
        .collect()
}

/// Baseline and calibrated reports for `projects`.
pub fn compare(
    levels: &FuzzyLevelSet,
    weights: &CalibratedWeights,
    projects: &[LabeledProject],
) -> Result<(EvaluationReport, EvaluationReport)> {
    weights.check_levels(levels)?;
    let pairs = |peaks: &[f64]| -> Result<Vec<(f64, f64)>> {
        let sizes = predict_sizes(levels, peaks, projects)?;
        Ok(projects.iter().map(|p| p.record.sloc).zip(sizes).collect())
    };
    let baseline = evaluate(&pairs(&levels.averages())?)?;
    let calibrated = evaluate(&pairs(&weights.weights)?)?;
    Ok((baseline, calibrated))
}

pub fn run_experiment(
    id: usize,
    dataset: &[LabeledProject],
    levels: &FuzzyLevelSet,
    config: &TrainingConfig,
) -> Result<ExperimentResult> {
    let split = SplitSpec::for_experiment(id)?;
    let (train_set, test_set) = split.apply(dataset)?;
    if test_set.is_empty() {
        return Err(Error::Config(format!("experiment {id}: test split is empty")));
    }
    let records: Vec<TrainingRecord> = train_set.iter().map(LabeledProject::training_record).collect();
    let weights = train(&records, levels, config)?;
    let (baseline_report, calibrated_report) = compare(levels, &weights, &test_set)?;
    let row = ImprovementRow {
        experiment_id: id,
        training_samples: train_set.len(),
        test_samples: test_set.len(),
        improvement: improvement(&baseline_report, &calibrated_report)?,
    };
    Ok(ExperimentResult {
        experiment_id: id,
        split,
        weights,
        baseline_report,
        calibrated_report,
        improvement: row,
    })
}

/// Experiments 1 through 7, in order. Each runs on its own thread.
pub fn run_all(
    dataset: &[LabeledProject],
    levels: &FuzzyLevelSet,
    config: &TrainingConfig,
) -> Result<Vec<ExperimentResult>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = EXPERIMENT_IDS
            .map(|id| scope.spawn(move || run_experiment(id, dataset, levels, config)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment thread panicked"))
            .collect()
    })
}
