//! Backfiring arithmetic and the programming-language table.
//!
//! Backfiring converts between function points and source lines through a
//! per-language conversion ratio (SLOC per FP). Ratios and sizes are kept as
//! reals everywhere; rounding to whole lines is a presentation concern.

use std::io::Read;
use std::path::Path;

use crate::csv_util;
use crate::error::{Error, Result};

/// Prefix accepted by [`resolve_language_level`] for datasets that carry a
/// raw language level instead of a language name, e.g. `level:3.5`.
pub const LEVEL_PREFIX: &str = "level:";

/// Function points to SLOC.
pub fn backfire(fp: f64, ratio: f64) -> Result<f64> {
    check_ratio(ratio)?;
    check_size(fp)?;
    Ok(fp * ratio)
}

/// SLOC to function points.
pub fn reverse_backfire(sloc: f64, ratio: f64) -> Result<f64> {
    check_ratio(ratio)?;
    check_size(sloc)?;
    Ok(sloc / ratio)
}

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRatio(ratio))
    }
}

fn check_size(size: f64) -> Result<()> {
    if size >= 0.0 && size.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSize(size))
    }
}

/// One row of a programming-language table.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageEntry {
    pub name: String,
    pub level: f64,
    pub low: f64,
    pub mean: f64,
    pub high: f64,
}

impl LanguageEntry {
    pub fn new(name: impl Into<String>, level: f64, low: f64, mean: f64, high: f64) -> Result<Self> {
        let name = name.into().trim().to_string();
        if name.is_empty() {
            return Err(Error::Config("language name is empty".into()));
        }
        if !(level > 0.0 && level.is_finite()) {
            return Err(Error::Config(format!("{name}: level must be positive, got {level}")));
        }
        if !(low > 0.0 && low <= mean && mean <= high && high.is_finite()) {
            return Err(Error::Config(format!(
                "{name}: need 0 < low <= mean <= high, got {low}/{mean}/{high}"
            )));
        }
        Ok(Self {
            name,
            level,
            low,
            mean,
            high,
        })
    }
}

/// Languages with their SPR level and low/mean/high SLOC per FP.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgrammingTable {
    entries: Vec<LanguageEntry>,
}

const DEFAULT_TABLE: [(&str, f64, f64, f64, f64); 8] = [
    ("Basic Assembly", 1.0, 213.0, 320.0, 427.0),
    ("C", 2.5, 21.0, 128.0, 235.0),
    ("Cobol", 3.0, 65.0, 107.0, 170.0),
    ("3rd Generation", 4.0, 45.0, 80.0, 125.0),
    ("C++", 6.0, 30.0, 53.0, 125.0),
    ("Java", 9.0, 20.0, 36.0, 51.0),
    ("4th Generation", 16.0, 16.0, 20.0, 24.0),
    ("SQL", 25.0, 8.0, 13.0, 17.0),
];

pub const TABLE_HEADER: [&str; 5] = ["name", "level", "low", "mean", "high"];

impl Default for ProgrammingTable {
    /// The published SPR sample table (eight languages).
    fn default() -> Self {
        let entries = DEFAULT_TABLE
            .iter()
            .map(|&(name, level, low, mean, high)| LanguageEntry {
                name: name.to_string(),
                level,
                low,
                mean,
                high,
            })
            .collect();
        Self { entries }
    }
}

fn key(name: &str) -> String {
    name.trim().to_lowercase()
}

impl ProgrammingTable {
    pub fn new(entries: Vec<LanguageEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("programming table is empty".into()));
        }
        for (i, entry) in entries.iter().enumerate() {
            if entries[..i].iter().any(|e| key(&e.name) == key(&entry.name)) {
                return Err(Error::Config(format!("duplicate language `{}`", entry.name)));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[LanguageEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Case-insensitive lookup with surrounding whitespace ignored.
    pub fn get(&self, name: &str) -> Option<&LanguageEntry> {
        let wanted = key(name);
        self.entries.iter().find(|e| key(&e.name) == wanted)
    }

    pub fn level_for_language(&self, name: &str) -> Result<f64> {
        self.get(name)
            .map(|e| e.level)
            .ok_or_else(|| Error::UnknownLanguage(name.trim().to_string()))
    }

    /// Parses the `name,level,low,mean,high` CSV format.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv_util::reader(input);
        csv_util::expect_header(&mut rdr, &TABLE_HEADER, &[])?;
        let mut entries: Vec<LanguageEntry> = Vec::new();
        let mut last_line = 1;
        for row in csv_util::records(&mut rdr) {
            let (line, rec) = row?;
            last_line = line;
            csv_util::expect_width(&rec, line, TABLE_HEADER.len())?;
            let level = csv_util::real(&rec, 1, "level", line)?;
            let low = csv_util::real(&rec, 2, "low", line)?;
            let mean = csv_util::real(&rec, 3, "mean", line)?;
            let high = csv_util::real(&rec, 4, "high", line)?;
            let entry = LanguageEntry::new(&rec[0], level, low, mean, high)
                .map_err(|e| Error::parse(line, strip_config(e)))?;
            if entries.iter().any(|e| key(&e.name) == key(&entry.name)) {
                return Err(Error::parse(line, format!("duplicate language `{}`", entry.name)));
            }
            entries.push(entry);
        }
        if entries.is_empty() {
            return Err(Error::parse(last_line, "programming table has no rows"));
        }
        Ok(Self { entries })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        csv_util::write_rows(
            &TABLE_HEADER,
            self.entries.iter().map(|e| {
                vec![
                    e.name.clone(),
                    e.level.to_string(),
                    e.low.to_string(),
                    e.mean.to_string(),
                    e.high.to_string(),
                ]
            }),
        )
    }
}

fn strip_config(err: Error) -> String {
    match err {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

/// Either the built-in table or a CSV file on disk.
pub fn load_programming_table(path: Option<&Path>) -> Result<ProgrammingTable> {
    match path {
        Some(p) => ProgrammingTable::from_path(p),
        None => Ok(ProgrammingTable::default()),
    }
}

/// Resolves a dataset's language column to a language level: a table name,
/// or a literal level written as `level:<real>`.
pub fn resolve_language_level(table: &ProgrammingTable, language: &str) -> Result<f64> {
    if let Some(entry) = table.get(language) {
        return Ok(entry.level);
    }
    let trimmed = language.trim();
    if let Some(raw) = trimmed
        .get(..LEVEL_PREFIX.len())
        .filter(|p| p.eq_ignore_ascii_case(LEVEL_PREFIX))
        .map(|_| &trimmed[LEVEL_PREFIX.len()..])
    {
        if let Ok(level) = raw.trim().parse::<f64>() {
            if level > 0.0 && level.is_finite() {
                return Ok(level);
            }
        }
    }
    Err(Error::UnknownLanguage(trimmed.to_string()))
}

/// One project: language, unadjusted function points and actual SLOC.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectRecord {
    pub id: String,
    pub language: String,
    pub ufp: f64,
    pub sloc: f64,
}

impl ProjectRecord {
    pub fn new(id: impl Into<String>, language: impl Into<String>, ufp: f64, sloc: f64) -> Result<Self> {
        let id = id.into();
        for (name, value) in [("ufp", ufp), ("sloc", sloc)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidRecord {
                    id,
                    message: format!("{name} must be positive, got {value}"),
                });
            }
        }
        Ok(Self {
            id,
            language: language.into(),
            ufp,
            sloc,
        })
    }

    /// Observed SLOC per function point.
    pub fn ratio(&self) -> f64 {
        self.sloc / self.ufp
    }
}
