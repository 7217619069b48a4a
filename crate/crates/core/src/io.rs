//! Plain-text matrix and label files, plus number formatting for reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::dcmm::MembershipMatrix;
use crate::error::{Error, Result};
use crate::graph::LabelMap;

/// Writes one row per line, comma separated, in shortest round-trip form.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut out: W) -> std::io::Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a comma- or whitespace-separated numeric matrix; `#` lines are
/// skipped.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, &path.display().to_string())
}

pub fn parse_matrix(text: &str, source: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    location: format!("{source}:{}", lineno + 1),
                    message: format!("not a number: {t:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    location: format!("{source}:{}", lineno + 1),
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            location: source.to_string(),
            message: "no data rows".into(),
        });
    }
    let k = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}

/// Reads a membership matrix and rescales rows to sum to one. Rows must
/// already sum to one within `1e-4`, which absorbs rounding in text files.
pub fn read_membership(path: impl AsRef<Path>) -> Result<MembershipMatrix> {
    let m = read_matrix_csv(path)?;
    for (i, row) in m.row_iter().enumerate() {
        let s = row.sum();
        if (s - 1.0).abs() > 1e-4 {
            return Err(Error::InvalidParameter(format!("membership row {i} sums to {s}")));
        }
    }
    MembershipMatrix::from_unnormalized(m)
}

/// Community labels per node, returned 0-based in dense node order.
///
/// Two layouts are accepted: one label per line (already in node order), or
/// `node community` pairs, which are ordered through `labels` when given and
/// by ascending node label otherwise. Community labels may be any integers;
/// they are renumbered `0..K` in ascending order.
pub fn read_labels(path: impl AsRef<Path>, labels: Option<&LabelMap>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, labels, &path.display().to_string())
}

pub fn parse_labels(text: &str, labels: Option<&LabelMap>, source: &str) -> Result<Vec<usize>> {
    let mut pairs: Vec<(Option<i64>, i64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |t: &str| Error::Parse {
            location: format!("{source}:{}", lineno + 1),
            message: format!("not an integer: {t:?}"),
        };
        let toks: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        match toks.as_slice() {
            [c] => pairs.push((None, c.parse().map_err(|_| bad(c))?)),
            [node, c] => pairs.push((Some(node.parse().map_err(|_| bad(node))?), c.parse().map_err(|_| bad(c))?)),
            _ => {
                return Err(Error::Parse {
                    location: format!("{source}:{}", lineno + 1),
                    message: "expected `community` or `node community`".into(),
                })
            }
        }
    }
    let keyed = pairs.iter().all(|p| p.0.is_some());
    if !keyed && pairs.iter().any(|p| p.0.is_some()) {
        return Err(Error::Parse {
            location: source.to_string(),
            message: "mixed one- and two-column lines".into(),
        });
    }
    let communities: Vec<i64> = if keyed {
        let mut ordered: Vec<(usize, i64)> = match labels {
            Some(map) => pairs
                .iter()
                .map(|&(node, c)| {
                    let node = node.unwrap();
                    map.index_of(node)
                        .map(|i| (i, c))
                        .ok_or_else(|| Error::InvalidParameter(format!("node {node} is not in the graph")))
                })
                .collect::<Result<_>>()?,
            None => {
                let map = LabelMap::from_labels(pairs.iter().map(|p| p.0.unwrap()));
                pairs.iter().map(|&(node, c)| (map.index_of(node.unwrap()).unwrap(), c)).collect()
            }
        };
        ordered.sort_by_key(|p| p.0);
        if ordered.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("a node is labelled twice".into()));
        }
        if let Some(map) = labels {
            if ordered.len() != map.len() {
                return Err(Error::Dimension(format!("{} labels for {} nodes", ordered.len(), map.len())));
            }
        }
        ordered.into_iter().map(|p| p.1).collect()
    } else {
        pairs.iter().map(|p| p.1).collect()
    };
    let names = LabelMap::from_labels(communities.iter().copied());
    Ok(communities.iter().map(|&c| names.index_of(c).unwrap()).collect())
}

/// Formats like C's `%.6g`: six significant digits, trailing zeros trimmed.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    // rounding may carry into the next decade
    let rounded: f64 = format!("{x:.5e}").parse().unwrap();
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) { exp + 1 } else { exp };
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{rounded:.decimals$}"))
    } else {
        let s = format!("{x:.5e}");
        let (mant, e) = s.split_once('e').unwrap();
        let e: i32 = e.parse().unwrap();
        format!("{}e{}{:02}", trim_zeros(mant.to_string()), if e < 0 { '-' } else { '+' }, e.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
