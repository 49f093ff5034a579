//! File formats and synthetic data.
//!
//! Every format is UTF-8 CSV with `.` decimals. Files written here may carry
//! leading `#` comment lines (provenance); readers skip them. Floats are
//! written in shortest round-trip form so reading a written file yields an
//! equal value.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calibration::{CalibratedWeights, TrainingConfig};
use crate::csv_util;
use crate::domain::{ProjectRecord, LEVEL_PREFIX};
use crate::error::{Error, Result};
use crate::fuzzy::FuzzyLevelSet;
use crate::metrics::{Improvement, ImprovementRow};

pub const DATASET_HEADER: [&str; 4] = ["id", "language", "ufp", "sloc"];
pub const WEIGHTS_HEADER: [&str; 4] = ["index", "weight", "clamp_min", "clamp_max"];
pub const REPORT_HEADER: [&str; 7] = [
    "experiment",
    "training_samples",
    "test_samples",
    "mmre_improvement",
    "mmer_improvement",
    "pred25_improvement",
    "pred50_improvement",
];
pub const CURVE_HEADER: [&str; 2] = ["language_level", "sloc_per_fp"];

fn comment_block(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

// ---------------------------------------------------------------- datasets

/// Reads `id,language,ufp,sloc`. Languages are not resolved here.
pub fn read_projects_csv<R: Read>(input: R) -> Result<Vec<ProjectRecord>> {
    let mut rdr = csv_util::reader(input);
    csv_util::expect_header(&mut rdr, &DATASET_HEADER, &[])?;
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for row in csv_util::records(&mut rdr) {
        let (line, rec) = row?;
        csv_util::expect_width(&rec, line, DATASET_HEADER.len())?;
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(Error::parse(line, "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::parse(line, format!("duplicate id `{id}`")));
        }
        let ufp = csv_util::positive(&rec, 2, "ufp", line)?;
        let sloc = csv_util::positive(&rec, 3, "sloc", line)?;
        records.push(ProjectRecord {
            id,
            language: rec[1].to_string(),
            ufp,
            sloc,
        });
    }
    Ok(records)
}

pub fn read_projects_path(path: impl AsRef<Path>) -> Result<Vec<ProjectRecord>> {
    read_projects_csv(std::fs::File::open(path)?)
}

pub fn write_projects_csv(records: &[ProjectRecord]) -> String {
    csv_util::write_rows(
        &DATASET_HEADER,
        records.iter().map(|r| {
            vec![
                r.id.clone(),
                r.language.clone(),
                r.ufp.to_string(),
                r.sloc.to_string(),
            ]
        }),
    )
}

// --------------------------------------------------------------- synthetic

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub per_level_count: usize,
    /// Multiplicative noise: SLOC is scaled by `1 + u`, `u ~ U[-noise, +noise]`.
    pub noise_fraction: f64,
    /// `(1-based level, true ratio)`; other levels use their average.
    pub true_ratios: Vec<(usize, f64)>,
    pub ufp_range: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            per_level_count: 20,
            noise_fraction: 0.0,
            true_ratios: Vec::new(),
            ufp_range: (10.0, 2000.0),
            seed: 0,
        }
    }
}

/// Language column used for a synthetic project at `language_level`.
pub fn level_language(language_level: f64) -> String {
    format!("{LEVEL_PREFIX}{language_level}")
}

/// Projects for every fuzzy level, placed at the level's anchor, with
/// `sloc = ufp × ratio × (1 + u)`.
pub fn generate_synthetic_dataset(levels: &FuzzyLevelSet, spec: &SyntheticSpec) -> Result<Vec<ProjectRecord>> {
    if spec.per_level_count == 0 {
        return Err(Error::Config("per_level_count must be at least 1".into()));
    }
    if !(spec.noise_fraction >= 0.0 && spec.noise_fraction < 1.0) {
        return Err(Error::Config(format!(
            "noise fraction must lie in [0, 1), got {}",
            spec.noise_fraction
        )));
    }
    let (ufp_lo, ufp_hi) = spec.ufp_range;
    if !(ufp_lo > 0.0 && ufp_lo <= ufp_hi && ufp_hi.is_finite()) {
        return Err(Error::Config(format!("bad UFP range [{ufp_lo}, {ufp_hi}]")));
    }
    let mut ratios = levels.averages();
    for &(index, ratio) in &spec.true_ratios {
        let level = levels.level(index)?;
        if !(ratio >= level.clamp_min && ratio <= level.clamp_max) {
            return Err(Error::Config(format!(
                "true ratio {ratio} for level {index} outside [{}, {}]",
                level.clamp_min, level.clamp_max
            )));
        }
        ratios[index - 1] = ratio;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(levels.len() * spec.per_level_count);
    for (level, &ratio) in levels.levels().iter().zip(&ratios) {
        let language = level_language(level.anchor);
        for k in 0..spec.per_level_count {
            let ufp = rng.random_range(ufp_lo..=ufp_hi);
            let u = if spec.noise_fraction > 0.0 {
                rng.random_range(-spec.noise_fraction..=spec.noise_fraction)
            } else {
                0.0
            };
            records.push(ProjectRecord {
                id: format!("s{:02}-{:04}", level.index, k + 1),
                language: language.clone(),
                ufp,
                sloc: ufp * ratio * (1.0 + u),
            });
        }
    }
    Ok(records)
}

/// One ratio per level drawn uniformly from its clamp bounds.
pub fn random_true_ratios(levels: &FuzzyLevelSet, seed: u64) -> Vec<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    levels
        .levels()
        .iter()
        .map(|l| (l.index, rng.random_range(l.clamp_min..=l.clamp_max)))
        .collect()
}

// ----------------------------------------------------------------- weights

/// Weights file with a provenance comment block. Fails if `weights` was
/// trained on a different level set.
pub fn write_weights_csv(weights: &CalibratedWeights, levels: &FuzzyLevelSet) -> Result<String> {
    weights.check_levels(levels)?;
    let c = &weights.config;
    let meta = [
        format!("levels_fingerprint={}", weights.levels_fingerprint),
        format!("epochs_run={}", weights.epochs_run),
        format!("final_epoch_error={}", weights.final_epoch_error),
        format!("learning_rate={}", c.learning_rate),
        format!("max_epochs={}", c.max_epochs),
        format!("error_goal={}", c.error_goal),
        format!("rng_seed={}", c.rng_seed),
        format!("shuffle_each_epoch={}", c.shuffle_each_epoch),
        format!("scale_update_by_ufp={}", c.scale_update_by_ufp),
    ];
    let body = csv_util::write_rows(
        &WEIGHTS_HEADER,
        weights.weights.iter().zip(levels.levels()).map(|(w, l)| {
            vec![
                l.index.to_string(),
                w.to_string(),
                l.clamp_min.to_string(),
                l.clamp_max.to_string(),
            ]
        }),
    );
    Ok(comment_block(&meta) + &body)
}

fn metadata(text: &str) -> BTreeMap<String, (usize, String)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let body = line.strip_prefix('#')?.trim();
            let (k, v) = body.split_once('=')?;
            Some((k.trim().to_string(), (i + 1, v.trim().to_string())))
        })
        .collect()
}

fn meta_value<T: std::str::FromStr>(meta: &BTreeMap<String, (usize, String)>, key: &str) -> Result<T> {
    let (line, raw) = meta
        .get(key)
        .ok_or_else(|| Error::parse(1, format!("missing `# {key}=` header line")))?;
    raw.parse()
        .map_err(|_| Error::parse(*line, format!("{key}: cannot parse `{raw}`")))
}

pub fn read_weights_csv<R: Read>(mut input: R) -> Result<CalibratedWeights> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let meta = metadata(&text);
    let config = TrainingConfig {
        learning_rate: meta_value(&meta, "learning_rate")?,
        max_epochs: meta_value(&meta, "max_epochs")?,
        error_goal: meta_value(&meta, "error_goal")?,
        rng_seed: meta_value(&meta, "rng_seed")?,
        shuffle_each_epoch: meta_value(&meta, "shuffle_each_epoch")?,
        scale_update_by_ufp: meta_value(&meta, "scale_update_by_ufp")?,
    };
    let mut rdr = csv_util::reader(text.as_bytes());
    csv_util::expect_header(&mut rdr, &WEIGHTS_HEADER, &[])?;
    let mut weights = Vec::new();
    let mut last_line = 1;
    for row in csv_util::records(&mut rdr) {
        let (line, rec) = row?;
        last_line = line;
        csv_util::expect_width(&rec, line, WEIGHTS_HEADER.len())?;
        let index = csv_util::index(&rec, 0, "index", line)?;
        if index != weights.len() + 1 {
            return Err(Error::parse(line, format!("index {index} out of sequence")));
        }
        let w = csv_util::positive(&rec, 1, "weight", line)?;
        let lo = csv_util::positive(&rec, 2, "clamp_min", line)?;
        let hi = csv_util::positive(&rec, 3, "clamp_max", line)?;
        if !(lo <= w && w <= hi) {
            return Err(Error::parse(line, format!("weight {w} outside [{lo}, {hi}]")));
        }
        weights.push(w);
    }
    if weights.is_empty() {
        return Err(Error::parse(last_line, "weights file has no rows"));
    }
    Ok(CalibratedWeights {
        weights,
        epochs_run: meta_value(&meta, "epochs_run")?,
        final_epoch_error: meta_value(&meta, "final_epoch_error")?,
        config,
        levels_fingerprint: meta_value(&meta, "levels_fingerprint")?,
    })
}

pub fn read_weights_path(path: impl AsRef<Path>) -> Result<CalibratedWeights> {
    read_weights_csv(std::fs::File::open(path)?)
}

// ----------------------------------------------------------------- reports

/// Experiment summary rows, preceded by `comments` as `#` lines.
pub fn write_report_csv(rows: &[ImprovementRow], comments: &[String]) -> String {
    let body = csv_util::write_rows(
        &REPORT_HEADER,
        rows.iter().map(|r| {
            let i = &r.improvement;
            vec![
                r.experiment_id.to_string(),
                r.training_samples.to_string(),
                r.test_samples.to_string(),
                i.mmre.to_string(),
                i.mmer.to_string(),
                i.pred25.to_string(),
                i.pred50.to_string(),
            ]
        }),
    );
    comment_block(comments) + &body
}

pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<ImprovementRow>> {
    let mut rdr = csv_util::reader(input);
    csv_util::expect_header(&mut rdr, &REPORT_HEADER, &[])?;
    let mut rows = Vec::new();
    for row in csv_util::records(&mut rdr) {
        let (line, rec) = row?;
        csv_util::expect_width(&rec, line, REPORT_HEADER.len())?;
        rows.push(ImprovementRow {
            experiment_id: csv_util::index(&rec, 0, "experiment", line)?,
            training_samples: csv_util::index(&rec, 1, "training_samples", line)?,
            test_samples: csv_util::index(&rec, 2, "test_samples", line)?,
            improvement: Improvement {
                mmre: csv_util::real(&rec, 3, "mmre_improvement", line)?,
                mmer: csv_util::real(&rec, 4, "mmer_improvement", line)?,
                pred25: csv_util::real(&rec, 5, "pred25_improvement", line)?,
                pred50: csv_util::real(&rec, 6, "pred50_improvement", line)?,
            },
        });
    }
    Ok(rows)
}

// ------------------------------------------------------------------ curves

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub language_level: f64,
    pub ratio: f64,
}

/// `(anchor, peak)` per level, ascending by anchor.
pub fn emit_curve(levels: &FuzzyLevelSet, peaks: &[f64]) -> Result<Vec<CurvePoint>> {
    if peaks.len() != levels.len() {
        return Err(Error::Incompatible(format!(
            "{} peaks for {} levels",
            peaks.len(),
            levels.len()
        )));
    }
    if let Some(bad) = peaks.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::InvalidRatio(*bad));
    }
    Ok(levels
        .anchors()
        .into_iter()
        .zip(peaks)
        .map(|(language_level, &ratio)| CurvePoint {
            language_level,
            ratio,
        })
        .collect())
}

pub fn write_curve_csv(points: &[CurvePoint]) -> String {
    csv_util::write_rows(
        &CURVE_HEADER,
        points
            .iter()
            .map(|p| vec![p.language_level.to_string(), p.ratio.to_string()]),
    )
}

pub fn read_curve_csv<R: Read>(input: R) -> Result<Vec<CurvePoint>> {
    let mut rdr = csv_util::reader(input);
    csv_util::expect_header(&mut rdr, &CURVE_HEADER, &[])?;
    csv_util::records(&mut rdr)
        .map(|row| {
            let (line, rec) = row?;
            csv_util::expect_width(&rec, line, CURVE_HEADER.len())?;
            Ok(CurvePoint {
                language_level: csv_util::real(&rec, 0, "language_level", line)?,
                ratio: csv_util::positive(&rec, 1, "sloc_per_fp", line)?,
            })
        })
        .collect()
}
