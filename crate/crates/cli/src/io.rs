//! File formats.
//!
//! * Series: CSV with one row per time point and one column per coordinate.
//!   An optional header row and `#` comment lines are allowed.
//! * Networks: an edge list. The first non-blank line declares the size as
//!   `# n=<nodes>, T=<length>`; each following row `t,i,j` marks an edge
//!   between nodes `i < j` at time `t`, all 1-based. A `t,i,j` header row is
//!   allowed.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use cpkit_core::series::{AdjacencySeries, VectorSeries};
use cpkit_sim::Observations;

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// 1-based source line of a record. The reader counts neither comment
/// lines nor the comments and blank lines in front of a record, so the line
/// is recounted from the record's byte offset.
fn line_at(text: &str, pos: Option<&csv::Position>) -> usize {
    pos.map_or(0, |p| {
        let start = (p.byte() as usize).min(text.len());
        let before = text.as_bytes()[..start].iter().filter(|&&b| b == b'\n').count();
        let skipped = text[start..]
            .lines()
            .take_while(|l| l.trim().is_empty() || l.trim_start().starts_with('#'))
            .count();
        before + skipped + 1
    })
}

fn csv_error(path: &Path, text: &str, e: csv::Error) -> CliError {
    CliError::parse(path, line_at(text, e.position()), e.to_string())
}

/// Reads a numeric series. One column gives a scalar series.
pub fn parse_series(path: &Path, text: &str) -> Result<Observations> {
    let mut data = Vec::new();
    let mut width: Option<usize> = None;
    let mut first = true;
    for rec in reader(text).records() {
        let rec = rec.map_err(|e| csv_error(path, text, e))?;
        let line = line_at(text, rec.position());
        let is_first = std::mem::replace(&mut first, false);
        if let Some(w) = width {
            if rec.len() != w {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("expected {w} columns, found {}", rec.len()),
                ));
            }
        }
        width = Some(rec.len());
        let mut row = Vec::with_capacity(rec.len());
        for (col, field) in rec.iter().enumerate() {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                Ok(_) => {
                    return Err(CliError::parse(
                        path,
                        line,
                        format!("column {}: non-finite value `{field}`", col + 1),
                    ))
                }
                Err(_) if is_first => break,
                Err(_) => {
                    return Err(CliError::parse(
                        path,
                        line,
                        format!("column {}: `{field}` is not a number", col + 1),
                    ))
                }
            }
        }
        if row.len() == rec.len() {
            data.extend(row);
        }
    }
    let Some(dim) = width.filter(|_| !data.is_empty()) else {
        return Err(CliError::parse(path, 0, "no observations"));
    };
    if dim == 1 {
        Ok(Observations::Scalar(data))
    } else {
        let series = VectorSeries::from_flat(data, dim).map_err(|e| CliError::parse(path, 0, e.to_string()))?;
        Ok(Observations::Vector(series))
    }
}

/// Parses the `# n=.., T=..` size line.
fn parse_size_header(path: &Path, text: &str) -> Result<(usize, usize)> {
    let (index, raw) = text
        .lines()
        .enumerate()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| CliError::parse(path, 0, "empty edge list"))?;
    let line = index + 1;
    let bad = || CliError::parse(path, line, "expected a `# n=<nodes>, T=<length>` header line");
    let body = raw.trim().strip_prefix('#').ok_or_else(bad)?;
    let (mut nodes, mut len) = (None, None);
    for part in body.split([',', ' ', '\t']).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(bad)?;
        let v: usize = v.trim().parse().map_err(|_| bad())?;
        match k.trim() {
            "n" => nodes = Some(v),
            "T" => len = Some(v),
            _ => return Err(bad()),
        }
    }
    match (nodes, len) {
        (Some(n), Some(t)) => Ok((n, t)),
        _ => Err(bad()),
    }
}

/// Reads an edge list.
pub fn parse_edges(path: &Path, text: &str) -> Result<AdjacencySeries> {
    let (nodes, len) = parse_size_header(path, text)?;
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    let mut first = true;
    for rec in reader(text).records() {
        let rec = rec.map_err(|e| csv_error(path, text, e))?;
        let line = line_at(text, rec.position());
        let is_first = std::mem::replace(&mut first, false);
        if rec.len() != 3 {
            return Err(CliError::parse(
                path,
                line,
                format!("expected 3 columns t,i,j, found {}", rec.len()),
            ));
        }
        let parsed: Vec<Option<usize>> = rec.iter().map(|f| f.parse().ok()).collect();
        let (t, i, j) = match parsed[..] {
            [Some(t), Some(i), Some(j)] => (t, i, j),
            _ if is_first && rec.iter().all(|f| f.parse::<f64>().is_err()) => continue,
            _ => {
                return Err(CliError::parse(
                    path,
                    line,
                    "fields must be positive integers",
                ))
            }
        };
        if t == 0 || t > len {
            return Err(CliError::parse(path, line, format!("time {t} outside 1..={len}")));
        }
        if i == 0 || i >= j || j > nodes {
            return Err(CliError::parse(
                path,
                line,
                format!("nodes ({i}, {j}) must satisfy 1 <= i < j <= {nodes}"),
            ));
        }
        if !seen.insert((t, i, j)) {
            return Err(CliError::parse(path, line, format!("duplicate edge ({t}, {i}, {j})")));
        }
        edges.push((t, i, j));
    }
    AdjacencySeries::from_edges(nodes, len, &edges).map_err(|e| CliError::parse(path, 0, e.to_string()))
}

/// Reads the input of a model family: an edge list for networks, a series
/// otherwise.
pub fn read_observations(path: &Path, network: bool) -> Result<Observations> {
    let text = read_text(path)?;
    if network {
        parse_edges(path, &text).map(Observations::Network)
    } else {
        parse_series(path, &text)
    }
}

/// Serialises observations in the format read by [`read_observations`].
pub fn format_observations(obs: &Observations) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut prefix = String::new();
    // Writing into a Vec cannot fail.
    match obs {
        Observations::Scalar(x) => {
            w.write_record(["x"]).unwrap();
            for v in x {
                w.write_record([v.to_string()]).unwrap();
            }
        }
        Observations::Vector(x) => {
            w.write_record((1..=x.dim()).map(|k| format!("x{k}"))).unwrap();
            for row in x.rows() {
                w.write_record(row.iter().map(f64::to_string)).unwrap();
            }
        }
        Observations::Network(a) => {
            prefix = format!("# n={}, T={}\n", a.nodes(), a.len());
            w.write_record(["t", "i", "j"]).unwrap();
            for (t, i, j) in a.edges() {
                w.write_record([t.to_string(), i.to_string(), j.to_string()]).unwrap();
            }
        }
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv");
    prefix + &body
}
