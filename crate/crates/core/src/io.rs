//! Text formats: sorted-triplet operators, complex vectors and two-column
//! potential tables. Numbers are written with 17 significant digits, which
//! round-trips every `f64` exactly.
//!
//! Operator file:
//!
//! ```text
//! # qedlab sparse-operator v1
//! dimension <n>
//! hermitian <hermitian|general|unchecked>
//! entries <nnz>
//! <row> <col> <re> <im>        (row-major, columns ascending)
//! ```
//!
//! Vector file:
//!
//! ```text
//! # qedlab vector v1
//! dimension <n>
//! <index> <re> <im>            (every index 0..n, ascending)
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};
use crate::sparse::{Hermiticity, SparseOperator};

pub const OPERATOR_MAGIC: &str = "# qedlab sparse-operator v1";
pub const VECTOR_MAGIC: &str = "# qedlab vector v1";

/// Renders a real with 17 significant digits.
pub fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn parse_real<T: Real>(tok: &str, line: usize) -> Result<T> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse { line, msg: format!("not a number: {tok:?}") })?;
    Ok(T::lit(v))
}

fn parse_count(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("not a count: {tok:?}") })
}

/// Significant lines (1-based number, trimmed text), skipping blanks and `#` comments.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header_value<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, &'a str)> {
    let (n, l) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("missing `{key}` line") })?;
    let mut it = l.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(k), Some(v), None) if k == key => Ok((n, v)),
        _ => Err(Error::Parse { line: n, msg: format!("expected `{key} <value>`") }),
    }
}

pub fn write_operator<T: Real>(op: &SparseOperator<T>) -> Result<String> {
    if !op.is_square() {
        return Err(Error::Consistency("only square operators are serialized".into()));
    }
    let mut s = String::new();
    let _ = writeln!(s, "{OPERATOR_MAGIC}");
    let _ = writeln!(s, "dimension {}", op.dim());
    let _ = writeln!(s, "hermitian {}", op.hermiticity().as_str());
    let _ = writeln!(s, "entries {}", op.nnz());
    for (r, c, v) in op.triplets() {
        let _ = writeln!(s, "{r} {c} {} {}", fmt_real(v.re), fmt_real(v.im));
    }
    Ok(s)
}

pub fn read_operator<T: Real>(text: &str) -> Result<SparseOperator<T>> {
    if text.lines().next().map(str::trim) != Some(OPERATOR_MAGIC) {
        return Err(Error::Parse { line: 1, msg: format!("expected `{OPERATOR_MAGIC}`") });
    }
    let mut lines = content_lines(text);
    let (ln, d) = header_value(&mut lines, "dimension")?;
    let dim = parse_count(d, ln)?;
    let (ln, h) = header_value(&mut lines, "hermitian")?;
    let herm = match h {
        "hermitian" => Hermiticity::Hermitian,
        "general" => Hermiticity::General,
        "unchecked" => Hermiticity::Unchecked,
        other => return Err(Error::Parse { line: ln, msg: format!("unknown hermitian flag {other:?}") }),
    };
    let (ln, e) = header_value(&mut lines, "entries")?;
    let nnz = parse_count(e, ln)?;
    let mut trip = Vec::with_capacity(nnz);
    let mut last: Option<(usize, usize)> = None;
    for (ln, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(Error::Parse { line: ln, msg: "expected `row col re im`".into() });
        }
        let (r, c) = (parse_count(tok[0], ln)?, parse_count(tok[1], ln)?);
        if r >= dim || c >= dim {
            return Err(Error::Parse { line: ln, msg: format!("index ({r}, {c}) outside dimension {dim}") });
        }
        if last.is_some_and(|p| p >= (r, c)) {
            return Err(Error::Parse { line: ln, msg: "entries must be sorted row-major without repeats".into() });
        }
        last = Some((r, c));
        trip.push((r, c, Cx::new(parse_real(tok[2], ln)?, parse_real(tok[3], ln)?)));
    }
    if trip.len() != nnz {
        return Err(Error::Parse { line: 0, msg: format!("header declares {nnz} entries, found {}", trip.len()) });
    }
    // the flag is restored verbatim; verification is the reader's business
    Ok(SparseOperator::from_triplets(dim, dim, trip, Hermiticity::Unchecked)?.with_hermiticity(herm))
}

pub fn write_vector<T: Real>(v: &[Cx<T>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{VECTOR_MAGIC}");
    let _ = writeln!(s, "dimension {}", v.len());
    for (i, z) in v.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {}", fmt_real(z.re), fmt_real(z.im));
    }
    s
}

pub fn read_vector<T: Real>(text: &str) -> Result<Vec<Cx<T>>> {
    if text.lines().next().map(str::trim) != Some(VECTOR_MAGIC) {
        return Err(Error::Parse { line: 1, msg: format!("expected `{VECTOR_MAGIC}`") });
    }
    let mut lines = content_lines(text);
    let (ln, d) = header_value(&mut lines, "dimension")?;
    let dim = parse_count(d, ln)?;
    let mut out = Vec::with_capacity(dim);
    for (ln, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != 3 {
            return Err(Error::Parse { line: ln, msg: "expected `index re im`".into() });
        }
        if parse_count(tok[0], ln)? != out.len() {
            return Err(Error::Parse { line: ln, msg: format!("expected index {}", out.len()) });
        }
        out.push(Cx::new(parse_real(tok[1], ln)?, parse_real(tok[2], ln)?));
    }
    if out.len() != dim {
        return Err(Error::Parse { line: 0, msg: format!("declared dimension {dim}, found {}", out.len()) });
    }
    Ok(out)
}

/// Two whitespace- or comma-separated columns `position value`; `#` starts a comment.
pub fn read_potential_table<T: Real>(text: &str) -> Result<Vec<(T, T)>> {
    let mut pts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let tok: Vec<&str> = l.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        if tok.len() != 2 {
            return Err(Error::Parse { line: ln, msg: "expected two columns: position value".into() });
        }
        let x: T = parse_real(tok[0], ln)?;
        let v: T = parse_real(tok[1], ln)?;
        if !x.is_finite() || !v.is_finite() {
            return Err(Error::Data(format!("non-finite potential value on line {ln}")));
        }
        pts.push((x, v));
    }
    if pts.is_empty() {
        return Err(Error::Data("empty potential table".into()));
    }
    Ok(pts)
}
