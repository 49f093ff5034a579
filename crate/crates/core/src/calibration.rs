//! Single-layer calibration of per-level conversion ratios.
//!
//! Each project is a one-hot input selecting its fuzzy level `x`, scaled by
//! its UFP. The network predicts `ufp × W_x`, takes `error = actual −
//! prediction`, moves `W_x` by `η × error` and clamps it to the level's
//! bounds. Records are visited one at a time in a seeded order; training is
//! inherently sequential.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fuzzy::FuzzyLevelSet;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Training stops once the epoch mean |error|/actual improves by less
    /// than this amount over the previous epoch.
    pub error_goal: f64,
    pub rng_seed: u64,
    pub shuffle_each_epoch: bool,
    /// Multiply each step by the record's UFP (classical delta rule).
    pub scale_update_by_ufp: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            max_epochs: 1000,
            error_goal: 1e-6,
            rng_seed: 0,
            shuffle_each_epoch: true,
            scale_update_by_ufp: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if !(self.error_goal >= 0.0 && self.error_goal.is_finite()) {
            return Err(Error::Config(format!(
                "error goal must be non-negative, got {}",
                self.error_goal
            )));
        }
        Ok(())
    }
}

/// A project already mapped to its crisp fuzzy level.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub id: String,
    /// 1-based fuzzy level.
    pub level_index: usize,
    pub ufp: f64,
    pub sloc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedWeights {
    /// SLOC/FP per fuzzy level, in level order.
    pub weights: Vec<f64>,
    pub epochs_run: usize,
    pub final_epoch_error: f64,
    pub config: TrainingConfig,
    pub levels_fingerprint: String,
}

impl CalibratedWeights {
    /// Weights equal to the levels' initial averages, before any training.
    pub fn initial(levels: &FuzzyLevelSet, config: TrainingConfig) -> Self {
        Self {
            weights: levels.averages(),
            epochs_run: 0,
            final_epoch_error: f64::NAN,
            config,
            levels_fingerprint: levels.fingerprint(),
        }
    }

    pub fn predict(&self, level_index: usize, ufp: f64) -> Result<f64> {
        predict(self, level_index, ufp)
    }

    pub fn check_levels(&self, levels: &FuzzyLevelSet) -> Result<()> {
        let found = levels.fingerprint();
        if found != self.levels_fingerprint {
            return Err(Error::StaleWeights {
                expected: self.levels_fingerprint.clone(),
                found,
            });
        }
        if self.weights.len() != levels.len() {
            return Err(Error::Incompatible(format!(
                "{} weights for {} levels",
                self.weights.len(),
                levels.len()
            )));
        }
        Ok(())
    }
}

/// `ufp × W[level_index]`.
pub fn predict(weights: &CalibratedWeights, level_index: usize, ufp: f64) -> Result<f64> {
    let w = level_index
        .checked_sub(1)
        .and_then(|i| weights.weights.get(i))
        .ok_or(Error::InvalidIndex {
            index: level_index,
            count: weights.weights.len(),
        })?;
    if !(ufp > 0.0 && ufp.is_finite()) {
        return Err(Error::InvalidSize(ufp));
    }
    Ok(ufp * w)
}

/// State after a single weight update, handed to training observers.
#[derive(Debug)]
pub struct UpdateStep<'a> {
    /// 1-based epoch.
    pub epoch: usize,
    pub record_id: &'a str,
    pub level_index: usize,
    pub error: f64,
    pub weights: &'a [f64],
}

pub fn train(
    records: &[TrainingRecord],
    levels: &FuzzyLevelSet,
    config: &TrainingConfig,
) -> Result<CalibratedWeights> {
    train_observed(records, levels, config, |_| {})
}

/// [`train`] with a callback invoked after every clamped update.
pub fn train_observed<F>(
    records: &[TrainingRecord],
    levels: &FuzzyLevelSet,
    config: &TrainingConfig,
    mut observer: F,
) -> Result<CalibratedWeights>
where
    F: FnMut(&UpdateStep<'_>),
{
    config.validate()?;
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for r in records {
        levels.level(r.level_index).map_err(|e| Error::InvalidRecord {
            id: r.id.clone(),
            message: e.to_string(),
        })?;
        for (name, value) in [("ufp", r.ufp), ("sloc", r.sloc)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidRecord {
                    id: r.id.clone(),
                    message: format!("{name} must be positive, got {value}"),
                });
            }
        }
    }

    let bounds: Vec<(f64, f64)> = levels
        .levels()
        .iter()
        .map(|l| (l.clamp_min, l.clamp_max))
        .collect();
    let mut weights = levels.averages();
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut previous: Option<f64> = None;
    let mut epochs_run = 0;
    let mut epoch_error = f64::NAN;

    for epoch in 1..=config.max_epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let mut relative_sum = 0.0;
        for &i in &order {
            let record = &records[i];
            let x = record.level_index - 1;
            let prediction = record.ufp * weights[x];
            let error = record.sloc - prediction;
            relative_sum += error.abs() / record.sloc;
            let step = if config.scale_update_by_ufp {
                config.learning_rate * error * record.ufp
            } else {
                config.learning_rate * error
            };
            let (lo, hi) = bounds[x];
            weights[x] = (weights[x] + step).clamp(lo, hi);
            observer(&UpdateStep {
                epoch,
                record_id: &record.id,
                level_index: record.level_index,
                error,
                weights: &weights,
            });
        }
        epochs_run = epoch;
        epoch_error = relative_sum / records.len() as f64;
        if epoch_error == 0.0 {
            break;
        }
        if let Some(prev) = previous {
            if prev - epoch_error < config.error_goal {
                break;
            }
        }
        previous = Some(epoch_error);
    }

    Ok(CalibratedWeights {
        weights,
        epochs_run,
        final_epoch_error: epoch_error,
        config: config.clone(),
        levels_fingerprint: levels.fingerprint(),
    })
}

/// The level set with its output peaks replaced by calibrated weights.
pub fn calibrated_conversion_table(
    levels: &FuzzyLevelSet,
    weights: &CalibratedWeights,
) -> Result<FuzzyLevelSet> {
    weights.check_levels(levels)?;
    levels.with_peaks(&weights.weights)
}
