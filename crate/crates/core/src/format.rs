//! Text and JSON encodings of fractions.
//!
//! Grid: an optional header line `I J`, then `I` lines of `J` characters,
//! each `0` or `1`. JSON: `{"I":3,"J":4,"points":[[1,1],[1,2],...]}` with
//! 1-based coordinates. [`parse_fraction`] picks JSON when the first
//! non-whitespace character is `{`.

use serde::{Deserialize, Serialize};

use crate::design::{BinaryTable, DesignSize, Fraction, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Grid,
    Json,
}

#[derive(Serialize, Deserialize)]
struct FractionJson {
    #[serde(rename = "I")]
    i: usize,
    #[serde(rename = "J")]
    j: usize,
    points: Vec<[usize; 2]>,
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

pub fn parse_fraction(input: &str) -> Result<Fraction> {
    if input.trim_start().starts_with('{') {
        parse_json(input)
    } else {
        parse_grid(input)
    }
}

pub fn parse_json(input: &str) -> Result<Fraction> {
    let raw: FractionJson = serde_json::from_str(input)
        .map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
    let size = DesignSize::new(raw.i, raw.j)?;
    let mut seen = std::collections::BTreeSet::new();
    for (n, &[i, j]) in raw.points.iter().enumerate() {
        let p = Point::new(i, j);
        if !size.contains(p) {
            return Err(parse_err(
                1,
                0,
                format!("point #{} {p} lies outside the {size} design", n + 1),
            ));
        }
        if !seen.insert(p) {
            return Err(parse_err(1, 0, format!("point #{} {p} is a duplicate", n + 1)));
        }
    }
    Fraction::new(size, raw.points.iter().map(|&[i, j]| (i, j)))
}

fn parse_header(line: &str, lineno: usize) -> Result<Option<(usize, usize)>> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 2 {
        return Ok(None);
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(lineno, 1, format!("bad header field {s:?}")))
    };
    Ok(Some((num(fields[0])?, num(fields[1])?)))
}

pub fn parse_grid(input: &str) -> Result<Fraction> {
    Ok(parse_table(input)?.to_fraction())
}

/// Parses the grid format into a binary table.
pub fn parse_table(input: &str) -> Result<BinaryTable> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    let header = match lines.peek() {
        Some(&(n, l)) => parse_header(l, n)?,
        None => return Err(parse_err(1, 1, "empty input")),
    };
    if header.is_some() {
        lines.next();
    }
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut width = header.map(|(_, j)| j);
    for (lineno, line) in lines {
        let line = line.trim();
        let mut row = Vec::with_capacity(line.len());
        for (c, ch) in line.chars().enumerate() {
            match ch {
                '0' => row.push(0),
                '1' => row.push(1),
                other => {
                    return Err(parse_err(
                        lineno,
                        c + 1,
                        format!("cell ({}, {}) is {other:?}, expected '0' or '1'", rows.len() + 1, c + 1),
                    ))
                }
            }
        }
        match width {
            Some(w) if w != row.len() => {
                return Err(parse_err(
                    lineno,
                    row.len().min(w) + 1,
                    format!("row {} has {} cells, expected {w}", rows.len() + 1, row.len()),
                ))
            }
            None => width = Some(row.len()),
            _ => {}
        }
        rows.push(row);
    }
    if let Some((i, _)) = header {
        if rows.len() != i {
            return Err(parse_err(
                1,
                1,
                format!("header declares {i} rows but {} were given", rows.len()),
            ));
        }
    }
    BinaryTable::from_rows(&rows)
}

/// Grid rendering with an `I J` header line.
pub fn to_grid(f: &Fraction) -> String {
    let size = f.size();
    format!("{} {}\n{}", size.rows(), size.cols(), f.to_table())
}

/// Single-line JSON rendering.
pub fn to_json(f: &Fraction) -> String {
    let raw = FractionJson {
        i: f.size().rows(),
        j: f.size().cols(),
        points: f.points().iter().map(|p| [p.i, p.j]).collect(),
    };
    serde_json::to_string(&raw).expect("plain data serializes")
}

pub fn to_json_value(f: &Fraction) -> serde_json::Value {
    serde_json::from_str(&to_json(f)).expect("round-trips through serde_json")
}

pub fn render(f: &Fraction, format: Format) -> String {
    match format {
        Format::Grid => to_grid(f),
        Format::Json => to_json(f) + "\n",
    }
}
