//! Text formats: the `density.csv` table and the line-oriented `report.txt`.
//!
//! `density.csv` has the header `t,z,j0,jz` and one row per kept cell per
//! snapshot, ordered by time and then position. `report.txt` holds one
//! `check ...` line per check followed by one `scalar <key> <value>` line per
//! scalar. Wall-clock timings are deliberately kept out of it so that two runs
//! of the same configuration produce identical files.

use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::causality::CausalityReport;
use crate::dynamics::History;
use crate::error::{Error, Result};
use crate::observables::current;

pub const DENSITY_HEADER: &str = "t,z,j0,jz";

/// One row of `density.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    pub t: f64,
    pub z: f64,
    pub j0: f64,
    pub jz: f64,
}

pub fn write_density_csv<W: Write>(history: &History, mut out: W, cell_stride: usize) -> Result<()> {
    if cell_stride == 0 {
        return Err(Error::InvalidArgument("cell_stride must be >= 1".into()));
    }
    writeln!(out, "{DENSITY_HEADER}")?;
    let grid = history.grid();
    for (k, snap) in history.snapshots().iter().enumerate() {
        let j = current(snap);
        let t = history.elapsed(k);
        for i in (0..grid.n_cells()).step_by(cell_stride) {
            writeln!(out, "{},{},{:e},{:e}", t, grid.center(i as isize), j.j0[i], j.jz[i])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_field<T: FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {what} `{s}`"),
    })
}

pub fn read_density_csv<R: BufRead>(input: R) -> Result<Vec<DensityRow>> {
    let mut lines = input.lines();
    match lines.next().transpose()? {
        Some(header) if header.trim_end() == DENSITY_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{DENSITY_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        let number = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: number,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        rows.push(DensityRow {
            t: parse_field(number, "t", fields[0])?,
            z: parse_field(number, "z", fields[1])?,
            j0: parse_field(number, "j0", fields[2])?,
            jz: parse_field(number, "jz", fields[3])?,
        });
    }
    Ok(rows)
}

/// Parsed contents of `report.txt`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportFile {
    pub checks: Vec<CausalityReport>,
    pub scalars: Vec<(String, f64)>,
}

impl ReportFile {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn scalar(&self, key: &str) -> Option<f64> {
        self.scalars.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn check(&self, name: &str) -> Option<&CausalityReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn write_report<W: Write>(mut out: W, checks: &[CausalityReport], scalars: &[(String, f64)]) -> Result<()> {
    for c in checks {
        if c.name.is_empty() || c.name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("check name `{}` is not a single word", c.name)));
        }
        writeln!(out, "check {c}")?;
    }
    for (k, v) in scalars {
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("scalar key `{k}` is not a single word")));
        }
        writeln!(out, "scalar {k} {v:e}")?;
    }
    out.flush()?;
    Ok(())
}

fn parse_check(number: usize, rest: &str) -> Result<CausalityReport> {
    let bad = |message: String| Error::Parse { line: number, message };
    let mut words = rest.split_whitespace();
    let pass = match words.next() {
        Some("PASS") => true,
        Some("FAIL") => false,
        other => return Err(bad(format!("expected PASS or FAIL, found {other:?}"))),
    };
    let name = words.next().ok_or_else(|| bad("missing check name".into()))?.to_string();
    let mut margin = None;
    let mut tolerance = None;
    let mut t = None;
    let mut z = None;
    for word in words {
        let (key, value) = word
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, found `{word}`")))?;
        let slot = match key {
            "margin" => &mut margin,
            "tolerance" => &mut tolerance,
            "t" => &mut t,
            "z" => &mut z,
            _ => return Err(bad(format!("unknown key `{key}`"))),
        };
        if slot.is_some() {
            return Err(bad(format!("duplicate key `{key}`")));
        }
        *slot = Some(parse_field::<f64>(number, key, value)?);
    }
    let margin = margin.ok_or_else(|| bad("missing margin".into()))?;
    let tolerance = tolerance.ok_or_else(|| bad("missing tolerance".into()))?;
    let worst = match (t, z) {
        (Some(t), Some(z)) => Some((t, z)),
        (None, None) => None,
        _ => return Err(bad("t and z must appear together".into())),
    };
    let report = CausalityReport::new(name, margin, tolerance, worst);
    if report.pass != pass {
        return Err(bad("verdict disagrees with margin and tolerance".into()));
    }
    Ok(report)
}

pub fn parse_report(text: &str) -> Result<ReportFile> {
    let mut report = ReportFile::default();
    for (n, line) in text.lines().enumerate() {
        let number = n + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (kind, rest) = line.split_once(' ').unwrap_or((line, ""));
        match kind {
            "check" => report.checks.push(parse_check(number, rest)?),
            "scalar" => {
                let mut words = rest.split_whitespace();
                let (Some(key), Some(value), None) = (words.next(), words.next(), words.next()) else {
                    return Err(Error::Parse {
                        line: number,
                        message: "expected `scalar <key> <value>`".into(),
                    });
                };
                report.scalars.push((key.to_string(), parse_field(number, key, value)?));
            }
            other => {
                return Err(Error::Parse {
                    line: number,
                    message: format!("unknown line kind `{other}`"),
                })
            }
        }
    }
    Ok(report)
}
