//! Plain-text matrix format (`.mtx.txt`).
//!
//! Line 1 holds `d n`; then `d` lines of `n` whitespace-separated tokens.
//! Values use the shortest representation that parses back to the same
//! `f64`. Observed mixtures write `NA` for missing entries, masks write
//! `0`/`1`, and assignment files write `0` for unobserved entries or the
//! 1-based component label.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{AssignmentMasks, DenseMatrix, Mask, ObservedMixture};
use crate::error::{MmcError, Result};

pub const MISSING_TOKEN: &str = "NA";

/// Shortest round-trip decimal for a finite value.
pub fn format_value(v: f64) -> String {
    ryu::Buffer::new().format_finite(v).to_owned()
}

fn write_grid(rows: usize, cols: usize, mut token: impl FnMut(usize, usize) -> String) -> String {
    let mut out = String::new();
    writeln!(out, "{rows} {cols}").unwrap();
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&token(i, j));
        }
        out.push('\n');
    }
    out
}

/// Parsed header plus one token vector per row.
struct Grid<'a> {
    rows: usize,
    cols: usize,
    tokens: Vec<Vec<&'a str>>,
}

fn parse_grid(text: &str) -> Result<Grid<'_>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(MmcError::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|_| MmcError::Parse {
            line: 1,
            msg: format!("bad dimension `{s}`"),
        })
    };
    if dims.len() != 2 {
        return Err(MmcError::Parse {
            line: 1,
            msg: "header must be `d n`".into(),
        });
    }
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    if rows == 0 || cols == 0 {
        return Err(MmcError::Parse {
            line: 1,
            msg: "dimensions must be positive".into(),
        });
    }
    let mut tokens = Vec::with_capacity(rows);
    for (idx, line) in lines {
        let row: Vec<&str> = line.split_whitespace().collect();
        if row.len() != cols {
            return Err(MmcError::Parse {
                line: idx + 1,
                msg: format!("expected {cols} entries, found {}", row.len()),
            });
        }
        tokens.push(row);
        if tokens.len() > rows {
            return Err(MmcError::Parse {
                line: idx + 1,
                msg: format!("more than {rows} data rows"),
            });
        }
    }
    if tokens.len() != rows {
        return Err(MmcError::Parse {
            line: tokens.len() + 2,
            msg: format!("expected {rows} data rows, found {}", tokens.len()),
        });
    }
    Ok(Grid { rows, cols, tokens })
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| MmcError::Parse {
        line,
        msg: format!("bad value `{tok}`"),
    })?;
    if !v.is_finite() {
        return Err(MmcError::Parse {
            line,
            msg: format!("non-finite value `{tok}`"),
        });
    }
    Ok(v)
}

pub fn write_matrix(m: &DenseMatrix) -> String {
    write_grid(m.rows(), m.cols(), |i, j| format_value(m.get(i, j)))
}

pub fn read_matrix(text: &str) -> Result<DenseMatrix> {
    let g = parse_grid(text)?;
    let mut data = Vec::with_capacity(g.rows * g.cols);
    for (i, row) in g.tokens.iter().enumerate() {
        for tok in row {
            data.push(parse_value(tok, i + 2)?);
        }
    }
    DenseMatrix::new(g.rows, g.cols, data)
}

pub fn write_observed(obs: &ObservedMixture) -> String {
    write_grid(obs.rows(), obs.cols(), |i, j| match obs.get(i, j) {
        Some(v) => format_value(v),
        None => MISSING_TOKEN.to_owned(),
    })
}

pub fn read_observed(text: &str) -> Result<ObservedMixture> {
    let g = parse_grid(text)?;
    let mut data = Vec::with_capacity(g.rows * g.cols);
    let mut bits = Vec::with_capacity(g.rows * g.cols);
    for (i, row) in g.tokens.iter().enumerate() {
        for tok in row {
            if *tok == MISSING_TOKEN {
                data.push(0.0);
                bits.push(0);
            } else {
                data.push(parse_value(tok, i + 2)?);
                bits.push(1);
            }
        }
    }
    ObservedMixture::new(
        DenseMatrix::new(g.rows, g.cols, data)?,
        Mask::new(g.rows, g.cols, bits)?,
    )
}

pub fn write_mask(mask: &Mask) -> String {
    write_grid(mask.rows(), mask.cols(), |i, j| {
        if mask.get(i, j) { "1" } else { "0" }.to_owned()
    })
}

pub fn read_mask(text: &str) -> Result<Mask> {
    let g = parse_grid(text)?;
    let mut bits = Vec::with_capacity(g.rows * g.cols);
    for (i, row) in g.tokens.iter().enumerate() {
        for tok in row {
            bits.push(match *tok {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(MmcError::Parse {
                        line: i + 2,
                        msg: format!("mask entry must be 0 or 1, got `{other}`"),
                    })
                }
            });
        }
    }
    Mask::new(g.rows, g.cols, bits)
}

pub fn write_assignments(a: &AssignmentMasks) -> String {
    let (rows, cols) = a.shape();
    let labels = a.labels();
    write_grid(rows, cols, |i, j| labels[i * cols + j].to_string())
}

/// Reads a label file. `k` fixes the component count; `None` takes the
/// largest label present.
pub fn read_assignments(text: &str, k: Option<usize>) -> Result<AssignmentMasks> {
    let g = parse_grid(text)?;
    let mut labels = Vec::with_capacity(g.rows * g.cols);
    for (i, row) in g.tokens.iter().enumerate() {
        for tok in row {
            let l: u8 = tok.parse().map_err(|_| MmcError::Parse {
                line: i + 2,
                msg: format!("bad label `{tok}`"),
            })?;
            labels.push(l);
        }
    }
    let k = k.unwrap_or_else(|| labels.iter().copied().max().unwrap_or(0).max(1) as usize);
    AssignmentMasks::from_labels(g.rows, g.cols, &labels, k)
}

pub fn save(path: impl AsRef<Path>, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_matrix(&fs::read_to_string(path)?)
}

pub fn load_observed(path: impl AsRef<Path>) -> Result<ObservedMixture> {
    read_observed(&fs::read_to_string(path)?)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    read_mask(&fs::read_to_string(path)?)
}

pub fn load_assignments(path: impl AsRef<Path>, k: Option<usize>) -> Result<AssignmentMasks> {
    read_assignments(&fs::read_to_string(path)?, k)
}
