//! LIBSVM sparse text format.
//!
//! One sample per line: `label idx:val idx:val ...` with 1-based, strictly
//! increasing indices. Blank lines and lines starting with `#` are skipped,
//! and anything after a `#` on a data line is ignored.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use coreball_core::{ClassId, Dataset, Sample, SparseVector};

use crate::error::{Error, Result};

pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut samples = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(sample) = parse_line(&line, n + 1)? {
            samples.push(sample);
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(Dataset::new(samples)?)
}

pub fn parse_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

pub fn read_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = File::open(path.as_ref())
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.as_ref().display())))?;
    parse_libsvm(BufReader::new(file))
}

/// Parses one line; `Ok(None)` for blank and comment lines.
pub(crate) fn parse_line(line: &str, lineno: usize) -> Result<Option<Sample>> {
    let data = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = data.split_whitespace();
    let Some(label) = tokens.next() else {
        return Ok(None);
    };
    let label = parse_label(label).ok_or_else(|| Error::parse(lineno, format!("invalid label '{label}'")))?;
    let features = parse_features(tokens, lineno)?;
    Ok(Some(Sample::new(features, label)))
}

/// Integer labels, with an optional leading `+`. Integral reals such as
/// `1.0` are accepted too, since several public files write them that way.
fn parse_label(token: &str) -> Option<ClassId> {
    let token = token.strip_prefix('+').unwrap_or(token);
    if let Ok(v) = token.parse::<ClassId>() {
        return Some(v);
    }
    let v: f64 = token.parse().ok()?;
    (v.fract() == 0.0 && v.abs() <= f64::from(ClassId::MAX)).then_some(v as ClassId)
}

/// Parses `idx:val` tokens into a 0-based sparse vector.
pub(crate) fn parse_features<'a>(tokens: impl Iterator<Item = &'a str>, lineno: usize) -> Result<SparseVector> {
    let mut pairs = Vec::new();
    let mut last = 0u32;
    for token in tokens {
        let (idx, val) = token
            .split_once(':')
            .ok_or_else(|| Error::parse(lineno, format!("malformed feature '{token}'")))?;
        let idx: u32 = idx
            .parse()
            .ok()
            .filter(|&i| i >= 1)
            .ok_or_else(|| Error::parse(lineno, format!("invalid feature index '{idx}'")))?;
        let val: f64 = val
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(lineno, format!("non-numeric value '{val}'")))?;
        if idx <= last {
            return Err(Error::parse(lineno, "non-increasing index"));
        }
        last = idx;
        pairs.push((idx - 1, val));
    }
    // indices were checked above, so this cannot fail
    Ok(SparseVector::from_pairs(pairs)?)
}

/// Writes `idx:val` pairs with 1-based indices, each preceded by a space.
pub(crate) fn write_features(out: &mut String, x: &SparseVector) {
    for (i, v) in x.iter() {
        let _ = write!(out, " {}:{v:?}", i + 1);
    }
}

/// Inverse of [`parse_libsvm`]: parsing the output gives back an equal dataset.
pub fn to_libsvm_string(dataset: &Dataset) -> String {
    let mut out = String::new();
    for s in dataset.samples() {
        let _ = write!(out, "{}", s.label);
        write_features(&mut out, &s.features);
        out.push('\n');
    }
    out
}
