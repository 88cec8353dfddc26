//! Run reports: a plain-text summary with optional CSV tables.
//!
//! ```text
//! # statdist report
//! version = 0.1.0
//! command = locc
//! generator = splitmix64-ctr/box-muller-polar/v1
//! [config]
//! seed = 0
//! [summary]
//! overlap_re = 7.0710678118654746e-1
//! [checks]
//! PASS leaf_constancy 1.1102230246251565e-16 <= 1.0000000000000001e-9
//! [table leaves]
//! outcome,amp_re,amp_im,p1,p2
//! 0-0,...
//! ```
//!
//! Reports carry no timestamps or paths beyond the config echo, so the same
//! configuration always renders to the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::formats::fmt_f64;
use crate::rng::GENERATOR_ID;
use crate::{Error, Result};

pub const REPORT_MAGIC: &str = "# statdist report";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtMost, limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtLeast, limit }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.value <= self.limit,
            Relation::AtLeast => self.value >= self.limit,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} {} {} {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            fmt_f64(self.value),
            self.relation.symbol(),
            fmt_f64(self.limit)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub generator: String,
    pub config: Vec<(String, String)>,
    pub values: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub tables: Vec<(String, Table)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            generator: GENERATOR_ID.to_string(),
            config: Vec::new(),
            values: Vec::new(),
            checks: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    pub fn value(&mut self, key: &str, v: f64) -> &mut Self {
        self.values.push((key.to_string(), v));
        self
    }

    pub fn check(&mut self, c: Check) -> &mut Self {
        self.checks.push(c);
        self
    }

    pub fn table(&mut self, name: &str, t: Table) -> &mut Self {
        self.tables.push((name.to_string(), t));
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn get_table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }

    /// Keys of summary values that are NaN or infinite.
    pub fn non_finite(&self) -> Vec<&str> {
        self.values.iter().filter(|(_, v)| !v.is_finite()).map(|(k, _)| k.as_str()).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{REPORT_MAGIC}");
        let _ = writeln!(out, "version = {}", self.version);
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "generator = {}", self.generator);
        out.push_str("[config]\n");
        for (k, v) in &self.config {
            let _ = writeln!(out, "{k} = {v}");
        }
        out.push_str("[summary]\n");
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {}", fmt_f64(*v));
        }
        if !self.checks.is_empty() {
            out.push_str("[checks]\n");
            for c in &self.checks {
                out.push_str(&c.line());
                out.push('\n');
            }
        }
        for (name, t) in &self.tables {
            let _ = writeln!(out, "[table {name}]");
            out.push_str(&t.to_csv());
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn key_value(text: &str, line: usize) -> Result<(String, String)> {
    let (k, v) = text.split_once(" = ").ok_or_else(|| perr(line, format!("expected `key = value`, found `{text}`")))?;
    Ok((k.to_string(), v.to_string()))
}

fn number(text: &str, line: usize) -> Result<f64> {
    text.parse().map_err(|_| perr(line, format!("bad number `{text}`")))
}

enum Section {
    Head,
    Config,
    Summary,
    Checks,
    Table,
}

/// Inverse of [`Report::render`].
pub fn parse_report(text: &str) -> Result<Report> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, REPORT_MAGIC)) => {}
        _ => return Err(perr(1, "missing report header")),
    }
    let mut r = Report::new("");
    let mut section = Section::Head;
    for (n, line) in lines {
        if let Some(name) = line.strip_prefix("[table ").and_then(|s| s.strip_suffix(']')) {
            r.tables.push((name.to_string(), Table::default()));
            section = Section::Table;
            continue;
        }
        match line {
            "[config]" => {
                section = Section::Config;
                continue;
            }
            "[summary]" => {
                section = Section::Summary;
                continue;
            }
            "[checks]" => {
                section = Section::Checks;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Head => {
                let (k, v) = key_value(line, n)?;
                match k.as_str() {
                    "version" => r.version = v,
                    "command" => r.command = v,
                    "generator" => r.generator = v,
                    _ => return Err(perr(n, format!("unknown header key `{k}`"))),
                }
            }
            Section::Config => r.config.push(key_value(line, n)?),
            Section::Summary => {
                let (k, v) = key_value(line, n)?;
                r.values.push((k, number(&v, n)?));
            }
            Section::Checks => {
                let f: Vec<&str> = line.split(' ').collect();
                if f.len() != 5 {
                    return Err(perr(n, "malformed check line"));
                }
                let relation = match f[3] {
                    "<=" => Relation::AtMost,
                    ">=" => Relation::AtLeast,
                    other => return Err(perr(n, format!("unknown relation `{other}`"))),
                };
                let c = Check { name: f[1].to_string(), value: number(f[2], n)?, relation, limit: number(f[4], n)? };
                if (f[0] == "PASS") != c.passed() {
                    return Err(perr(n, "check verdict does not match its values"));
                }
                r.checks.push(c);
            }
            Section::Table => {
                let t = &mut r.tables.last_mut().expect("table section").1;
                let cells: Vec<String> = line.split(',').map(str::to_string).collect();
                if t.header.is_empty() {
                    t.header = cells;
                } else if cells.len() != t.header.len() {
                    return Err(perr(n, "row width differs from the header"));
                } else {
                    t.rows.push(cells);
                }
            }
        }
    }
    Ok(r)
}
