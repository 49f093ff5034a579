//! Shared CSV plumbing: strict headers, `#` comment lines, 1-based line numbers.

use std::io::Read;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::error::{Error, Result};

pub(crate) fn reader<R: Read>(input: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(input)
}

/// Checks the header against `required` columns followed by an optional
/// tail that must be present as a whole or not at all. Returns whether the
/// optional tail is present.
pub(crate) fn expect_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    required: &[&str],
    optional: &[&str],
) -> Result<bool> {
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    let line = header.position().map_or(1, |p| p.line() as usize);
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::parse(line, "missing header"));
    }
    let names: Vec<&str> = header.iter().collect();
    let full: Vec<&str> = required.iter().chain(optional).copied().collect();
    if names == required {
        Ok(false)
    } else if !optional.is_empty() && names == full {
        Ok(true)
    } else {
        let wanted = if optional.is_empty() {
            required.join(",")
        } else {
            format!("{}[,{}]", required.join(","), optional.join(","))
        };
        Err(Error::parse(
            line,
            format!("bad header `{}`, expected `{wanted}`", names.join(",")),
        ))
    }
}

pub(crate) fn records<R: Read>(
    rdr: &mut csv::Reader<R>,
) -> impl Iterator<Item = Result<(usize, StringRecord)>> + '_ {
    rdr.records().map(|rec| {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        Ok((line, rec))
    })
}

pub(crate) fn expect_width(rec: &StringRecord, line: usize, width: usize) -> Result<()> {
    if rec.len() != width {
        return Err(Error::parse(
            line,
            format!("expected {width} fields, found {}", rec.len()),
        ));
    }
    Ok(())
}

pub(crate) fn real(rec: &StringRecord, idx: usize, name: &str, line: usize) -> Result<f64> {
    let raw = &rec[idx];
    let value: f64 = raw
        .parse()
        .map_err(|_| Error::parse(line, format!("{name}: `{raw}` is not a number")))?;
    if !value.is_finite() {
        return Err(Error::parse(line, format!("{name}: `{raw}` is not finite")));
    }
    Ok(value)
}

pub(crate) fn positive(rec: &StringRecord, idx: usize, name: &str, line: usize) -> Result<f64> {
    let value = real(rec, idx, name, line)?;
    if value <= 0.0 {
        return Err(Error::parse(line, format!("{name} must be positive, got {value}")));
    }
    Ok(value)
}

pub(crate) fn index(rec: &StringRecord, idx: usize, name: &str, line: usize) -> Result<usize> {
    let raw = &rec[idx];
    raw.parse()
        .map_err(|_| Error::parse(line, format!("{name}: `{raw}` is not a non-negative integer")))
}

/// Serialises `rows` under `header`, quoting fields where needed.
pub(crate) fn write_rows<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut wtr = csv::WriterBuilder::new().from_writer(Vec::new());
    wtr.write_record(header).expect("write to memory");
    for row in rows {
        wtr.write_record(&row).expect("write to memory");
    }
    String::from_utf8(wtr.into_inner().expect("flush to memory")).expect("utf-8 input")
}
