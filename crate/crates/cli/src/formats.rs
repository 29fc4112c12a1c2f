//! Text formats: protomatrices, CPM tables, TOML campaign and constraint
//! files, and the CSV threshold report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pldpch::lifting::{CpmBlock, QcCode};
use pldpch::pexit::ThresholdReport;
use pldpch::protograph::{Constraints, Protomatrix};
use serde::Deserialize;

/// A malformed input, with the 1-based line it was found on (0 when the
/// problem is not tied to a line).
#[derive(Debug, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError { line, msg: msg.into() }
}

/// Non-empty lines with `#` comments removed, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn numbers<T: std::str::FromStr>(line: usize, s: &str) -> Result<Vec<T>, FormatError> {
    s.split_whitespace()
        .map(|t| t.parse().map_err(|_| err(line, format!("`{t}` is not a non-negative integer"))))
        .collect()
}

/// Protomatrix file: a header `m n [r]` followed by `m` rows of `n` entries.
/// When present, `r` must equal the row weight minus two.
pub fn parse_protomatrix(text: &str) -> Result<Protomatrix, FormatError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| err(0, "empty protomatrix file"))?;
    let head: Vec<usize> = numbers(hl, header)?;
    if !(2..=3).contains(&head.len()) {
        return Err(err(hl, "header must be `m n` or `m n r`"));
    }
    let (m, n) = (head[0], head[1]);
    let mut rows = Vec::with_capacity(m);
    let mut last = hl;
    for (ln, l) in lines {
        if rows.len() == m {
            return Err(err(ln, format!("more than {m} rows")));
        }
        let row: Vec<u32> = numbers(ln, l)?;
        if row.len() != n {
            return Err(err(ln, format!("{} entries, expected {n}", row.len())));
        }
        rows.push(row);
        last = ln;
    }
    if rows.len() != m {
        return Err(err(last, format!("{} rows, expected {m}", rows.len())));
    }
    let b = Protomatrix::from_rows(&rows).map_err(|e| err(hl, e.to_string()))?;
    if let Some(&r) = head.get(2) {
        match b.uniform_row_weight() {
            Some(d) if d == r + 2 => {}
            _ => return Err(err(hl, format!("declared r = {r} but rows do not all weigh {}", r + 2))),
        }
    }
    Ok(b)
}

pub fn write_protomatrix(b: &Protomatrix) -> String {
    let mut out = match b.uniform_row_weight() {
        Some(d) if d >= 2 => format!("{} {} {}\n", b.m(), b.n(), d - 2),
        _ => format!("{} {}\n", b.m(), b.n()),
    };
    out.push_str(&b.to_string());
    out
}

/// CPM table: a header `m n z1 z2 d`, then one line per block row listing its
/// `d` blocks as `column:shift` in edge-slot order.
pub fn parse_cpm_table(text: &str) -> Result<QcCode, FormatError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| err(0, "empty CPM table"))?;
    let head: Vec<usize> = numbers(hl, header)?;
    let [m, n, z1, z2, d] = head[..] else {
        return Err(err(hl, "header must be `m n z1 z2 d`"));
    };
    let mut blocks = Vec::with_capacity(m * z1 * d);
    let mut row = 0;
    let mut last = hl;
    for (ln, l) in lines {
        let pairs: Vec<&str> = l.split_whitespace().collect();
        if pairs.len() != d {
            return Err(err(ln, format!("{} blocks, expected {d}", pairs.len())));
        }
        for p in pairs {
            let (c, s) = p.split_once(':').ok_or_else(|| err(ln, format!("`{p}` is not `column:shift`")))?;
            let parse = |t: &str| t.parse::<usize>().map_err(|_| err(ln, format!("`{t}` is not a non-negative integer")));
            blocks.push(CpmBlock { row, col: parse(c)?, shift: parse(s)? });
        }
        row += 1;
        last = ln;
    }
    if row != m * z1 {
        return Err(err(last, format!("{row} block rows, expected {}", m * z1)));
    }
    QcCode::new(m, n, z1, z2, d, blocks).map_err(|e| err(0, e.to_string()))
}

pub fn write_cpm_table(code: &QcCode) -> String {
    let mut out = format!("{} {} {} {} {}\n", code.m(), code.n(), code.z1(), code.z2(), code.row_weight());
    for br in 0..code.block_rows() {
        let row: Vec<String> = code.row_blocks(br).iter().map(|b| format!("{}:{}", b.col, b.shift)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Search constraints file (TOML).
#[derive(Clone, Debug, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsFile {
    pub m: usize,
    pub n: usize,
    pub row_weight: usize,
    pub min_col_weight: usize,
    pub max_col_weight: usize,
    pub max_entry: u32,
}

impl From<ConstraintsFile> for Constraints {
    fn from(c: ConstraintsFile) -> Self {
        Constraints {
            m: c.m,
            n: c.n,
            row_weight: c.row_weight,
            min_col_weight: c.min_col_weight,
            max_col_weight: c.max_col_weight,
            max_entry: c.max_entry,
        }
    }
}

pub fn parse_constraints(text: &str) -> Result<Constraints, FormatError> {
    let c: ConstraintsFile = toml::from_str(text).map_err(toml_error(text))?;
    Ok(c.into())
}

fn toml_error(text: &str) -> impl Fn(toml::de::Error) -> FormatError + '_ {
    move |e| {
        let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].lines().count().max(1));
        err(line, e.message().to_string())
    }
}

fn default_max_iters() -> usize {
    300
}

fn default_frame_errors() -> u64 {
    100
}

fn default_max_frames() -> u64 {
    10_000_000
}

/// Simulation campaign (TOML). Relative paths resolve against the file.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    /// Protomatrix file.
    pub proto: PathBuf,
    pub z1: usize,
    pub z2: usize,
    /// Seed of the lifting.
    pub lift_seed: u64,
    /// Seed of the channel noise.
    pub seed: u64,
    pub ebn0_db: Vec<f64>,
    /// Punctured protograph columns, counted from 1.
    #[serde(default)]
    pub puncture_cols: Vec<usize>,
    #[serde(default)]
    pub puncture_d1h: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_frame_errors")]
    pub frame_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    /// Results file; the command line may override it.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn parse_campaign(text: &str, base: &Path) -> Result<Campaign, FormatError> {
    let mut c: Campaign = toml::from_str(text).map_err(toml_error(text))?;
    if c.ebn0_db.is_empty() {
        return Err(err(0, "ebn0_db lists no points"));
    }
    if c.ebn0_db.iter().any(|x| !x.is_finite()) {
        return Err(err(0, "ebn0_db must be finite"));
    }
    c.proto = base.join(&c.proto);
    c.out = c.out.map(|o| base.join(o));
    Ok(c)
}

pub const PEXIT_HEADER: &str = "ebn0_db,converged,iterations,min_i_app";

/// One row per evaluated Eb/N0 in search order.
pub fn write_pexit_report(rep: &ThresholdReport) -> String {
    let mut out = String::from(PEXIT_HEADER);
    out.push('\n');
    for s in &rep.steps {
        let _ = writeln!(out, "{},{},{},{}", s.ebn0_db, s.converged, s.iterations, s.min_i_app);
    }
    out
}

/// Comma-separated list of 1-based column numbers, converted to 0-based.
pub fn parse_columns(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("`{t}` is not a column number (columns count from 1)")),
            Ok(c) => Ok(c - 1),
        })
        .collect()
}

/// Comma-separated list of reals.
pub fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("`{t}` is not a number")))
        .collect()
}
