//! Estimation-error criteria: MRE, MER, their means, and PRED.

use crate::error::{Error, Result};

/// `|actual − predicted| / actual`.
pub fn mre(actual: f64, predicted: f64) -> Result<f64> {
    if !(actual > 0.0) {
        return Err(Error::UndefinedMetric(format!("MRE with actual = {actual}")));
    }
    Ok((actual - predicted).abs() / actual)
}

/// `|actual − predicted| / predicted`.
pub fn mer(actual: f64, predicted: f64) -> Result<f64> {
    if !(predicted > 0.0) {
        return Err(Error::UndefinedMetric(format!("MER with predicted = {predicted}")));
    }
    Ok((actual - predicted).abs() / predicted)
}

/// Fraction of pairs whose MRE is strictly below `threshold`.
pub fn pred(pairs: &[(f64, f64)], threshold: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut hits = 0usize;
    for &(a, p) in pairs {
        if mre(a, p)? < threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationReport {
    pub mmre: f64,
    pub mmer: f64,
    pub pred25: f64,
    pub pred50: f64,
    pub n: usize,
}

/// Evaluates `(actual, predicted)` pairs.
pub fn evaluate(pairs: &[(f64, f64)]) -> Result<EvaluationReport> {
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let (mut mre_sum, mut mer_sum) = (0.0, 0.0);
    let (mut under25, mut under50) = (0usize, 0usize);
    for &(actual, predicted) in pairs {
        let r = mre(actual, predicted)?;
        mre_sum += r;
        mer_sum += mer(actual, predicted)?;
        under25 += usize::from(r < 0.25);
        under50 += usize::from(r < 0.50);
    }
    let n = pairs.len() as f64;
    Ok(EvaluationReport {
        mmre: mre_sum / n,
        mmer: mer_sum / n,
        pred25: under25 as f64 / n,
        pred50: under50 as f64 / n,
        n: pairs.len(),
    })
}

/// Baseline-to-calibrated change in percentage points; positive means the
/// calibrated model is better.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Improvement {
    pub mmre: f64,
    pub mmer: f64,
    pub pred25: f64,
    pub pred50: f64,
}

pub fn improvement(baseline: &EvaluationReport, calibrated: &EvaluationReport) -> Result<Improvement> {
    if baseline.n != calibrated.n {
        return Err(Error::Incompatible(format!(
            "reports over {} and {} samples",
            baseline.n, calibrated.n
        )));
    }
    Ok(Improvement {
        mmre: 100.0 * (baseline.mmre - calibrated.mmre),
        mmer: 100.0 * (baseline.mmer - calibrated.mmer),
        pred25: 100.0 * (calibrated.pred25 - baseline.pred25),
        pred50: 100.0 * (calibrated.pred50 - baseline.pred50),
    })
}

/// One line of the experiment summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementRow {
    pub experiment_id: usize,
    pub training_samples: usize,
    pub test_samples: usize,
    pub improvement: Improvement,
}
