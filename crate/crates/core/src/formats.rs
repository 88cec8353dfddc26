//! Plain-text state, matrix and density files.
//!
//! State files start with `dims d1 .. dn` followed by one `re im` line per
//! amplitude. A second block, separated by a blank line, makes a pair.
//! Matrix and density files start with `dim n` followed by `n²` lines of
//! `re im` in row-major order. Numbers are written with `{:.16e}`, which
//! round-trips every `f64` exactly.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::mixed::MixedState;
use crate::statekit::{PartyLayout, PureState};
use crate::{CMatrix, Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Format a float so that parsing it back gives the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_complex(text: &str, line: usize) -> Result<Complex64> {
    let mut it = text.split_whitespace();
    let (Some(re), Some(im), None) = (it.next(), it.next(), it.next()) else {
        return Err(parse_err(line, format!("expected `re im`, found `{}`", text.trim())));
    };
    let re: f64 = re.parse().map_err(|_| parse_err(line, format!("bad real part `{re}`")))?;
    let im: f64 = im.parse().map_err(|_| parse_err(line, format!("bad imaginary part `{im}`")))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(parse_err(line, "non-finite amplitude"));
    }
    Ok(Complex64::new(re, im))
}

/// A header line plus its amplitude lines.
struct Block {
    header_line: usize,
    header: Vec<usize>,
    values: Vec<Complex64>,
}

/// Split `text` into blocks whose header starts with `keyword`. `count`
/// turns the header numbers into the number of amplitude lines.
fn parse_blocks(text: &str, keyword: &str, count: impl Fn(&[usize]) -> usize) -> Result<Vec<Block>> {
    let mut blocks: Vec<Block> = Vec::new();
    let mut expected = 0usize;
    let mut open = false;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            if open {
                let b = blocks.last().expect("open block");
                if b.values.len() < expected {
                    return Err(parse_err(line, format!("expected {expected} amplitudes, found {}", b.values.len())));
                }
                open = false;
            }
            continue;
        }
        if !open {
            let mut words = trimmed.split_whitespace();
            if words.next() != Some(keyword) {
                return Err(parse_err(line, format!("expected `{keyword} ...` header, found `{trimmed}`")));
            }
            let header = words
                .map(|w| w.parse::<usize>().ok().filter(|&d| d > 0))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| parse_err(line, "dimensions must be positive integers"))?;
            if header.is_empty() {
                return Err(parse_err(line, "header lists no dimensions"));
            }
            expected = count(&header);
            blocks.push(Block { header_line: line, header, values: Vec::with_capacity(expected) });
            open = true;
            continue;
        }
        let b = blocks.last_mut().expect("open block");
        if b.values.len() == expected {
            return Err(parse_err(line, format!("more than {expected} amplitudes under the header on line {}", b.header_line)));
        }
        b.values.push(parse_complex(trimmed, line)?);
    }
    if let Some(b) = blocks.last() {
        if open && b.values.len() < expected {
            return Err(parse_err(last_line + 1, format!("expected {expected} amplitudes, found {}", b.values.len())));
        }
    }
    if blocks.is_empty() {
        return Err(parse_err(1, "empty file"));
    }
    Ok(blocks)
}

/// Parse one state or a pair of states.
pub fn parse_states(text: &str) -> Result<Vec<PureState>> {
    let blocks = parse_blocks(text, "dims", |d| d.iter().product())?;
    if blocks.len() > 2 {
        return Err(parse_err(blocks[2].header_line, "a state file holds at most two states"));
    }
    blocks
        .into_iter()
        .map(|b| {
            let layout = PartyLayout::new(b.header).map_err(|e| parse_err(b.header_line, e.to_string()))?;
            PureState::new(layout, b.values).map_err(|e| parse_err(b.header_line, e.to_string()))
        })
        .collect()
}

pub fn parse_state_file(path: &Path) -> Result<Vec<PureState>> {
    parse_states(&fs::read_to_string(path)?)
}

/// Parse a file that must hold exactly two states.
pub fn parse_state_pair_file(path: &Path) -> Result<(PureState, PureState)> {
    let mut states = parse_state_file(path)?;
    if states.len() != 2 {
        return Err(Error::Usage(format!("{} holds {} state(s), expected a pair", path.display(), states.len())));
    }
    let s2 = states.pop().expect("two states");
    let s1 = states.pop().expect("two states");
    Ok((s1, s2))
}

pub fn write_state(s: &PureState) -> String {
    let mut out = String::from("dims");
    for d in s.layout().dims() {
        out.push_str(&format!(" {d}"));
    }
    out.push('\n');
    for a in s.amps() {
        out.push_str(&format!("{} {}\n", fmt_f64(a.re), fmt_f64(a.im)));
    }
    out
}

pub fn write_state_pair(s1: &PureState, s2: &PureState) -> String {
    format!("{}\n{}", write_state(s1), write_state(s2))
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let blocks = parse_blocks(text, "dim", |d| d.iter().product::<usize>().pow(2))?;
    if blocks.len() != 1 {
        return Err(parse_err(blocks[1].header_line, "a matrix file holds one matrix"));
    }
    let b = &blocks[0];
    if b.header.len() != 1 {
        return Err(parse_err(b.header_line, "`dim` takes a single size"));
    }
    let n = b.header[0];
    Ok(CMatrix::from_row_slice(n, n, &b.values))
}

pub fn parse_matrix_file(path: &Path) -> Result<CMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix(m: &CMatrix) -> String {
    let mut out = format!("dim {}\n", m.nrows());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push_str(&format!("{} {}\n", fmt_f64(m[(r, c)].re), fmt_f64(m[(r, c)].im)));
        }
    }
    out
}

/// Matrix file validated as a density matrix.
pub fn parse_density_file(path: &Path) -> Result<MixedState> {
    MixedState::new(parse_matrix_file(path)?)
}
