//! Fuzzy programming-language levels and the single-input Mamdani system
//! that maps a language level to a conversion ratio.
//!
//! Input sets form a Ruspini partition over the level anchors: interior
//! levels are triangles whose feet sit on the neighbouring anchors, the
//! first and last levels are shoulders. Rule `i` maps input set `i` to an
//! output triangle centred on the level's peak ratio. Activations use
//! `min`, aggregation uses `max`, and the crisp ratio is the centroid of
//! the aggregate sampled on a uniform grid.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::csv_util;
use crate::domain::ProgrammingTable;
use crate::error::{Error, Result};

/// Range edges of the published 19-level grouping.
pub const DEFAULT_BOUNDARIES: [f64; 20] = [
    0.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0, 8.5, 9.0, 9.5, 11.0, 14.0, 16.0, 20.0, 23.0, 25.0,
    27.0, 50.0,
];

/// Average SLOC/FP per level of the published grouping.
pub const DEFAULT_AVERAGES: [f64; 19] = [
    128.0, 107.0, 91.0, 81.0, 67.0, 53.0, 46.0, 40.0, 38.0, 36.0, 34.0, 29.0, 23.0, 20.0, 16.0,
    14.0, 13.0, 12.0, 6.0,
];

/// Samples used to discretise the output universe.
pub const GRID_POINTS: usize = 1001;

/// Clamp bounds for a level holding no table entry, as multiples of its average.
const EMPTY_CLAMP: (f64, f64) = (0.5, 1.5);

pub const LEVELS_HEADER: [&str; 4] = ["index", "range_low", "range_high", "avg_ratio"];
pub const LEVELS_CLAMP_COLUMNS: [&str; 2] = ["clamp_min", "clamp_max"];

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyLevel {
    /// 1-based ordinal.
    pub index: usize,
    /// Exclusive lower edge.
    pub range_low: f64,
    /// Inclusive upper edge.
    pub range_high: f64,
    /// Peak of the input membership function.
    pub anchor: f64,
    /// Output peak in SLOC/FP; the initial calibration weight.
    pub avg_ratio: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
}

impl FuzzyLevel {
    pub fn contains(&self, language_level: f64) -> bool {
        language_level > self.range_low && language_level <= self.range_high
    }

    pub fn clamp(&self, ratio: f64) -> f64 {
        ratio.clamp(self.clamp_min, self.clamp_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Triangle,
    /// Full membership at and below the peak.
    LeftShoulder,
    /// Full membership at and above the peak.
    RightShoulder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipFunction {
    pub shape: Shape,
    pub left_foot: f64,
    pub peak: f64,
    pub right_foot: f64,
}

impl MembershipFunction {
    pub fn triangle(left_foot: f64, peak: f64, right_foot: f64) -> Self {
        debug_assert!(left_foot <= peak && peak <= right_foot);
        Self {
            shape: Shape::Triangle,
            left_foot,
            peak,
            right_foot,
        }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        if x == self.peak {
            return 1.0;
        }
        if x < self.peak {
            if self.shape == Shape::LeftShoulder {
                1.0
            } else if x <= self.left_foot {
                0.0
            } else {
                (x - self.left_foot) / (self.peak - self.left_foot)
            }
        } else if self.shape == Shape::RightShoulder {
            1.0
        } else if x >= self.right_foot {
            0.0
        } else {
            (self.right_foot - x) / (self.right_foot - self.peak)
        }
    }
}

/// Ordered, contiguous fuzzy levels.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyLevelSet {
    levels: Vec<FuzzyLevel>,
}

impl Default for FuzzyLevelSet {
    /// The published 19 levels over the built-in programming table.
    fn default() -> Self {
        build_fuzzy_levels(
            &ProgrammingTable::default(),
            &DEFAULT_BOUNDARIES,
            Some(&DEFAULT_AVERAGES),
        )
        .expect("built-in fuzzy levels are valid")
    }
}

impl FuzzyLevelSet {
    /// Validates a configured level set, including the non-increasing
    /// average ratio across levels.
    pub fn new(levels: Vec<FuzzyLevel>) -> Result<Self> {
        validate(&levels, true)?;
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[FuzzyLevel] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// 1-based access.
    pub fn level(&self, index: usize) -> Result<&FuzzyLevel> {
        index
            .checked_sub(1)
            .and_then(|i| self.levels.get(i))
            .ok_or(Error::InvalidIndex {
                index,
                count: self.levels.len(),
            })
    }

    pub fn averages(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.avg_ratio).collect()
    }

    pub fn anchors(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.anchor).collect()
    }

    /// The covered interval `(low, high]`.
    pub fn coverage(&self) -> (f64, f64) {
        (self.levels[0].range_low, self.levels[self.levels.len() - 1].range_high)
    }

    /// Same ranges and clamps with the output peaks replaced. Peaks must
    /// respect each level's clamp bounds; monotonicity is not required.
    pub fn with_peaks(&self, peaks: &[f64]) -> Result<Self> {
        self.check_peaks(peaks)?;
        let levels = self
            .levels
            .iter()
            .zip(peaks)
            .map(|(l, &p)| FuzzyLevel {
                avg_ratio: p,
                ..l.clone()
            })
            .collect::<Vec<_>>();
        validate(&levels, false)?;
        Ok(Self { levels })
    }

    fn check_peaks(&self, peaks: &[f64]) -> Result<()> {
        if peaks.len() != self.levels.len() {
            return Err(Error::Incompatible(format!(
                "{} output peaks for {} fuzzy levels",
                peaks.len(),
                self.levels.len()
            )));
        }
        for (level, &peak) in self.levels.iter().zip(peaks) {
            if !(peak >= level.clamp_min && peak <= level.clamp_max) {
                return Err(Error::Config(format!(
                    "peak {peak} for level {} outside [{}, {}]",
                    level.index, level.clamp_min, level.clamp_max
                )));
            }
        }
        Ok(())
    }

    /// Stable short digest of every field of every level.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_csv_string().as_bytes());
        digest[..8].iter().fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn assign(&self, language_level: f64) -> Result<usize> {
        assign_fuzzy_level(self, language_level)
    }

    pub fn fuzzify(&self, language_level: f64) -> Result<Vec<f64>> {
        fuzzify(self, language_level)
    }

    /// Ratio inferred with the set's own `avg_ratio` as output peaks.
    pub fn infer(&self, language_level: f64) -> Result<f64> {
        infer_ratio(self, &self.averages(), language_level)
    }

    /// Input membership function of the 1-based level `index`.
    pub fn input_membership(&self, index: usize) -> Result<MembershipFunction> {
        let level = self.level(index)?;
        let i = index - 1;
        let n = self.levels.len();
        let left = if i > 0 { self.levels[i - 1].anchor } else { level.range_low };
        let right = if i + 1 < n { self.levels[i + 1].anchor } else { level.range_high };
        let shape = if i == 0 {
            Shape::LeftShoulder
        } else if i + 1 == n {
            Shape::RightShoulder
        } else {
            Shape::Triangle
        };
        Ok(MembershipFunction {
            shape,
            left_foot: left,
            peak: level.anchor,
            right_foot: right,
        })
    }

    /// Parses `index,range_low,range_high,avg_ratio[,clamp_min,clamp_max]`.
    /// Without clamp columns the bounds are derived from `table`.
    pub fn from_csv<R: Read>(input: R, table: &ProgrammingTable) -> Result<Self> {
        let mut rdr = csv_util::reader(input);
        let with_clamps = csv_util::expect_header(&mut rdr, &LEVELS_HEADER, &LEVELS_CLAMP_COLUMNS)?;
        let width = LEVELS_HEADER.len() + if with_clamps { 2 } else { 0 };
        let mut levels = Vec::new();
        let mut last_line = 1;
        for row in csv_util::records(&mut rdr) {
            let (line, rec) = row?;
            last_line = line;
            csv_util::expect_width(&rec, line, width)?;
            let index = csv_util::index(&rec, 0, "index", line)?;
            if index != levels.len() + 1 {
                return Err(Error::parse(
                    line,
                    format!("index {index} out of sequence, expected {}", levels.len() + 1),
                ));
            }
            let range_low = csv_util::real(&rec, 1, "range_low", line)?;
            let range_high = csv_util::real(&rec, 2, "range_high", line)?;
            let avg_ratio = csv_util::positive(&rec, 3, "avg_ratio", line)?;
            let (clamp_min, clamp_max) = if with_clamps {
                (
                    csv_util::positive(&rec, 4, "clamp_min", line)?,
                    csv_util::positive(&rec, 5, "clamp_max", line)?,
                )
            } else {
                clamp_bounds(table, range_low, range_high, avg_ratio)
            };
            let level = FuzzyLevel {
                index,
                range_low,
                range_high,
                anchor: range_high,
                avg_ratio,
                clamp_min,
                clamp_max,
            };
            validate_level(&level).map_err(|e| Error::parse(line, e))?;
            if let Some(prev) = levels.last() {
                validate_pair(prev, &level).map_err(|e| Error::parse(line, e))?;
            }
            levels.push(level);
        }
        if levels.is_empty() {
            return Err(Error::parse(last_line, "fuzzy level file has no rows"));
        }
        Ok(Self { levels })
    }

    pub fn from_path(path: impl AsRef<Path>, table: &ProgrammingTable) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?, table)
    }

    /// Full six-column form; reads back to an equal value.
    pub fn to_csv_string(&self) -> String {
        let mut out = format!("{},{}\n", LEVELS_HEADER.join(","), LEVELS_CLAMP_COLUMNS.join(","));
        for l in &self.levels {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                l.index, l.range_low, l.range_high, l.avg_ratio, l.clamp_min, l.clamp_max
            );
        }
        out
    }
}

fn validate_level(l: &FuzzyLevel) -> std::result::Result<(), String> {
    let finite = [l.range_low, l.range_high, l.anchor, l.avg_ratio, l.clamp_min, l.clamp_max]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(format!("level {}: non-finite field", l.index));
    }
    if l.range_low >= l.range_high {
        return Err(format!(
            "level {}: empty range ({}, {}]",
            l.index, l.range_low, l.range_high
        ));
    }
    if !(l.anchor > l.range_low && l.anchor <= l.range_high) {
        return Err(format!("level {}: anchor {} outside its range", l.index, l.anchor));
    }
    if !(l.clamp_min > 0.0 && l.clamp_min <= l.avg_ratio && l.avg_ratio <= l.clamp_max) {
        return Err(format!(
            "level {}: need 0 < clamp_min <= avg_ratio <= clamp_max, got {}/{}/{}",
            l.index, l.clamp_min, l.avg_ratio, l.clamp_max
        ));
    }
    Ok(())
}

fn validate_pair(prev: &FuzzyLevel, next: &FuzzyLevel) -> std::result::Result<(), String> {
    if prev.range_high != next.range_low {
        return Err(format!(
            "level {} starts at {} but level {} ends at {}",
            next.index, next.range_low, prev.index, prev.range_high
        ));
    }
    if next.avg_ratio > prev.avg_ratio {
        return Err(format!(
            "avg_ratio must not increase with level: level {} has {} after {}",
            next.index, next.avg_ratio, prev.avg_ratio
        ));
    }
    Ok(())
}

fn validate(levels: &[FuzzyLevel], monotone_ratio: bool) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Config("fuzzy level set is empty".into()));
    }
    for (i, level) in levels.iter().enumerate() {
        if level.index != i + 1 {
            return Err(Error::Config(format!(
                "level at position {} has index {}",
                i + 1,
                level.index
            )));
        }
        validate_level(level).map_err(Error::Config)?;
    }
    for pair in levels.windows(2) {
        match validate_pair(&pair[0], &pair[1]) {
            Err(msg) if monotone_ratio || pair[0].range_high != pair[1].range_low => {
                return Err(Error::Config(msg))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Min `low` and max `high` over table entries in `(low, high]`, or
/// `[0.5, 1.5] × avg` when the range holds no entry.
fn clamp_bounds(table: &ProgrammingTable, low: f64, high: f64, avg: f64) -> (f64, f64) {
    let inside = table
        .entries()
        .iter()
        .filter(|e| e.level > low && e.level <= high);
    let bounds = inside.fold(None, |acc: Option<(f64, f64)>, e| {
        Some(match acc {
            Some((lo, hi)) => (lo.min(e.low), hi.max(e.high)),
            None => (e.low, e.high),
        })
    });
    bounds.unwrap_or((EMPTY_CLAMP.0 * avg, EMPTY_CLAMP.1 * avg))
}

/// Groups table languages into one fuzzy level per consecutive pair of
/// `boundaries`. `averages`, when given, overrides the per-level average
/// that would otherwise be the mean of the contained entries' means.
pub fn build_fuzzy_levels(
    table: &ProgrammingTable,
    boundaries: &[f64],
    averages: Option<&[f64]>,
) -> Result<FuzzyLevelSet> {
    if boundaries.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 boundaries, got {}",
            boundaries.len()
        )));
    }
    if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("boundaries must be finite and strictly increasing".into()));
    }
    let count = boundaries.len() - 1;
    if let Some(avg) = averages {
        if avg.len() != count {
            return Err(Error::Config(format!(
                "{} averages for {count} levels",
                avg.len()
            )));
        }
    }
    let mut levels = Vec::with_capacity(count);
    for (i, edge) in boundaries.windows(2).enumerate() {
        let (low, high) = (edge[0], edge[1]);
        let means: Vec<f64> = table
            .entries()
            .iter()
            .filter(|e| e.level > low && e.level <= high)
            .map(|e| e.mean)
            .collect();
        let avg_ratio = match averages {
            Some(avg) => avg[i],
            None if means.is_empty() => {
                return Err(Error::Config(format!(
                    "level {} ({low}, {high}] holds no language and no average was supplied",
                    i + 1
                )))
            }
            None => means.iter().sum::<f64>() / means.len() as f64,
        };
        let (clamp_min, clamp_max) = clamp_bounds(table, low, high, avg_ratio);
        levels.push(FuzzyLevel {
            index: i + 1,
            range_low: low,
            range_high: high,
            anchor: high,
            avg_ratio,
            clamp_min,
            clamp_max,
        });
    }
    FuzzyLevelSet::new(levels)
}

fn out_of_range(levels: &FuzzyLevelSet, language_level: f64) -> Error {
    let (low, high) = levels.coverage();
    Error::OutOfRange {
        level: language_level,
        low,
        high,
    }
}

/// Crisp 1-based level whose `(range_low, range_high]` holds the level.
pub fn assign_fuzzy_level(levels: &FuzzyLevelSet, language_level: f64) -> Result<usize> {
    levels
        .levels
        .iter()
        .find(|l| l.contains(language_level))
        .map(|l| l.index)
        .ok_or_else(|| out_of_range(levels, language_level))
}

/// One-hot input vector for a 1-based level index.
pub fn one_hot(levels: &FuzzyLevelSet, index: usize) -> Result<Vec<f64>> {
    levels.level(index)?;
    let mut v = vec![0.0; levels.len()];
    v[index - 1] = 1.0;
    Ok(v)
}

/// Membership of `language_level` in every input set.
pub fn fuzzify(levels: &FuzzyLevelSet, language_level: f64) -> Result<Vec<f64>> {
    let (low, high) = levels.coverage();
    if !(language_level > low && language_level <= high) {
        return Err(out_of_range(levels, language_level));
    }
    let anchors = levels.anchors();
    let n = anchors.len();
    let mut mu = vec![0.0; n];
    if language_level <= anchors[0] {
        mu[0] = 1.0;
    } else if language_level >= anchors[n - 1] {
        mu[n - 1] = 1.0;
    } else {
        // first anchor strictly above the input
        let j = anchors.partition_point(|&a| a <= language_level);
        if anchors[j - 1] == language_level {
            mu[j - 1] = 1.0;
        } else {
            let (a, b) = (anchors[j - 1], anchors[j]);
            mu[j - 1] = (b - language_level) / (b - a);
            mu[j] = (language_level - a) / (b - a);
        }
    }
    Ok(mu)
}

/// Output universe and the symmetric output triangle of every rule.
#[derive(Debug, Clone)]
pub struct OutputSets {
    pub universe: (f64, f64),
    pub sets: Vec<MembershipFunction>,
}

impl OutputSets {
    /// The universe spans `[0.5 × min peak, 1.1 × max clamp_max]`. Each
    /// triangle is centred on its peak with half-width equal to the
    /// distance to the nearest adjacent peak, kept inside the universe and
    /// never narrower than two grid steps.
    pub fn new(levels: &FuzzyLevelSet, peaks: &[f64], grid_points: usize) -> Result<Self> {
        levels.check_peaks(peaks)?;
        if grid_points < 2 {
            return Err(Error::Config("output grid needs at least 2 points".into()));
        }
        let min_peak = peaks.iter().copied().fold(f64::INFINITY, f64::min);
        let max_clamp = levels
            .levels
            .iter()
            .map(|l| l.clamp_max)
            .fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = (0.5 * min_peak, 1.1 * max_clamp);
        let step = (hi - lo) / (grid_points - 1) as f64;
        let n = peaks.len();
        let sets = (0..n)
            .map(|i| {
                let p = peaks[i];
                let mut half = f64::INFINITY;
                if i > 0 {
                    half = half.min((p - peaks[i - 1]).abs());
                }
                if i + 1 < n {
                    half = half.min((p - peaks[i + 1]).abs());
                }
                if !half.is_finite() {
                    // lone level
                    half = 0.5 * p;
                }
                let half = half.max(2.0 * step).min(p - lo).min(hi - p);
                MembershipFunction::triangle(p - half, p, p + half)
            })
            .collect();
        Ok(Self {
            universe: (lo, hi),
            sets,
        })
    }

    /// Centroid of the max-aggregate of output sets truncated at their
    /// activations.
    pub fn centroid(&self, activations: &[f64], grid_points: usize) -> Result<f64> {
        let fired: Vec<(f64, &MembershipFunction)> = activations
            .iter()
            .zip(&self.sets)
            .filter(|(a, _)| **a > 0.0)
            .map(|(&a, set)| (a.min(1.0), set))
            .collect();
        if fired.is_empty() {
            return Err(Error::Config("degenerate aggregate: no rule fired".into()));
        }
        // Membership is zero outside the fired sets, so the samples are
        // spread over their joint support only.
        let (lo, hi) = fired.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), (_, set)| (lo.min(set.left_foot), hi.max(set.right_foot)),
        );
        let (lo, hi) = (lo.max(self.universe.0), hi.min(self.universe.1));
        let step = (hi - lo) / (grid_points - 1) as f64;
        let (mut moment, mut area) = (0.0, 0.0);
        for k in 0..grid_points {
            let x = lo + k as f64 * step;
            let mu = fired
                .iter()
                .map(|(a, set)| a.min(set.evaluate(x)))
                .fold(0.0, f64::max);
            moment += x * mu;
            area += mu;
        }
        if area <= 0.0 {
            return Err(Error::Config("degenerate aggregate: no rule fired".into()));
        }
        Ok(moment / area)
    }
}

/// Conversion ratio for a language level given per-level output peaks.
pub fn infer_ratio(levels: &FuzzyLevelSet, output_peaks: &[f64], language_level: f64) -> Result<f64> {
    let activations = fuzzify(levels, language_level)?;
    let sets = OutputSets::new(levels, output_peaks, GRID_POINTS)?;
    sets.centroid(&activations, GRID_POINTS)
}
